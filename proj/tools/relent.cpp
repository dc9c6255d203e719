// Command-line front end: loads systems, codes, and measures from text files
// or the built-in gallery, runs the library computations, and prints a
// deterministic JSON (or flattened TSV) report on standard output.
//
// Exit codes: 0 success, 2 validation/usage failure, 3 I/O failure. Errors are
// reported as a machine-readable JSON object on standard output.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relent/gallery.hpp"
#include "relent/joining.hpp"
#include "relent/relmax.hpp"

namespace {

using nlohmann::json;
using namespace relent;

struct Globals {
  std::string format = "json";
  std::string unit = "nat";
  uint64_t seed = 0;
  uint64_t cap = 1000000;
};

// Entropy-like fields are converted on output; everything internal is in nats.
double unit_scale(const Globals& g) { return g.unit == "bit" ? 1.0 / std::log(2.0) : 1.0; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("cannot read '" + path + "'");
  return ss.str();
}

// Shared input plumbing: a gallery name supplies both systems and the code;
// otherwise explicit files are required.
struct Inputs {
  std::string gallery;
  std::string system, ysystem, code;
  std::string side = "x";

  void add_code_options(CLI::App* sub) {
    sub->add_option("--gallery", gallery, "built-in example name (see 'gallery list')");
    sub->add_option("--system", system, "domain system file");
    sub->add_option("--ysystem", ysystem, "image system file");
    sub->add_option("--code", code, "symbol map file");
  }

  void add_system_options(CLI::App* sub) {
    sub->add_option("--gallery", gallery, "built-in example name (see 'gallery list')");
    sub->add_option("--side", side, "which gallery system to use: x or y")
        ->check(CLI::IsMember({"x", "y"}));
    sub->add_option("--system", system, "system file");
  }

  FactorCode load_code() const {
    if (!gallery.empty()) return gallery_load(gallery).code;
    if (system.empty() || ysystem.empty() || code.empty())
      throw validation_error("need --gallery or all of --system, --ysystem, --code");
    Sft x = parse_sft(read_file(system));
    Sft y = parse_sft(read_file(ysystem));
    return parse_code(read_file(code), x, y);
  }

  Sft load_system() const {
    if (!gallery.empty()) {
      auto e = gallery_load(gallery);
      return side == "y" ? e.code.codomain : e.code.domain;
    }
    if (system.empty()) throw validation_error("need --gallery or --system");
    return parse_sft(read_file(system));
  }

  json echo() const {
    json j;
    if (!gallery.empty()) {
      j["gallery"] = gallery;
      j["side"] = side;
    }
    if (!system.empty()) j["system"] = system;
    if (!ysystem.empty()) j["ysystem"] = ysystem;
    if (!code.empty()) j["code"] = code;
    return j;
  }
};

MarkovMeasure load_measure(const std::string& path, const Sft& sft) {
  return parse_measure(read_file(path), sft);
}

// --- JSON builders ---------------------------------------------------------

json jvec(const std::vector<double>& v) { return json(v); }

json jvecq(const std::vector<Rat>& v) {
  json a = json::array();
  for (auto& q : v) a.push_back(rat_to_string(q));
  return a;
}

json jmat(const Mat<double>& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json jmatq(const Mat<Rat>& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(rat_to_string(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json jwords(const Sft& s, const std::vector<Word>& ws) {
  json a = json::array();
  for (auto& w : ws) a.push_back(format_word(s, w));
  return a;
}

// --- output ------------------------------------------------------------------

void tsv_walk(const json& v, const std::string& key, std::ostream& os) {
  if (v.is_object()) {
    for (auto& [k, sub] : v.items()) tsv_walk(sub, key.empty() ? k : key + "." + k, os);
  } else if (v.is_array()) {
    for (size_t i = 0; i < v.size(); ++i)
      tsv_walk(v[i], key + "[" + std::to_string(i) + "]", os);
  } else {
    os << key << "\t";
    if (v.is_string())
      os << v.get<std::string>();
    else
      os << v.dump();
    os << "\n";
  }
}

void emit(const Globals& g, const std::string& command, json params, json results) {
  params["format"] = g.format;
  params["unit"] = g.unit;
  json env;
  env["schema_version"] = report_schema_version();
  env["command"] = command;
  env["parameters"] = std::move(params);
  env["results"] = std::move(results);
  if (g.format == "tsv")
    tsv_walk(env, "", std::cout);
  else
    std::cout << env.dump(2) << "\n";
}

void emit_error(const Error& e) {
  json env;
  env["schema_version"] = report_schema_version();
  env["error"] = {{"kind", e.kind}, {"message", std::string(e.what())}};
  std::cout << env.dump(2) << "\n";
}

// --- subcommand bodies ---------------------------------------------------------

json run_validate(const Globals& g, const Inputs& in, int n_max) {
  json res;
  auto pack = [](const SftValidation& v) {
    return json{{"ok", v.ok}, {"stranded", v.stranded}, {"messages", v.messages}};
  };
  bool have_code = !in.gallery.empty() || !in.code.empty();
  if (have_code) {
    FactorCode c = in.load_code();
    res["domain"] = pack(validate(c.domain));
    res["codomain"] = pack(validate(c.codomain));
    auto cv = validate_code(c);
    res["code"] = {{"ok", cv.ok},
                   {"edge_violations", cv.edge_violations},
                   {"uncovered_symbols", cv.uncovered_symbols}};
    auto img = image_subshift_check(c, n_max, g.cap);
    res["image_check"] = {{"ok", img.ok},
                          {"n_max", img.n_max},
                          {"missing", jwords(c.codomain, img.missing)}};
  } else {
    Sft s = in.load_system();
    res["system"] = pack(validate(s));
  }
  return res;
}

json run_parry(const Globals& g, const Inputs& in) {
  Sft s = in.load_system();
  auto mu = parry_measure(s);
  const int n = s.size();
  Mat<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = s.edge(i, j) ? 1.0 : 0.0;
  auto sd = perron(a);
  json res;
  res["symbols"] = s.symbols;
  res["lambda"] = sd.lambda;
  res["entropy"] = unit_scale(g) * entropy(mu);
  res["transition"] = jmat(mu.P);
  res["stationary"] = jvec(mu.pi);
  return res;
}

json run_entropy(const Globals& g, const Inputs& in, const std::string& mu_path, double alpha,
                 double image_entropy) {
  Sft s = in.load_system();
  auto mu = load_measure(mu_path, s);
  json res;
  res["entropy"] = unit_scale(g) * entropy(mu);
  if (alpha >= 0) {
    // --image-entropy is taken in the selected output unit
    double h_nu = image_entropy / unit_scale(g);
    res["weighted"] = unit_scale(g) * weighted_entropy(mu, h_nu, alpha);
    res["alpha"] = alpha;
  }
  return res;
}

json run_pushforward(const Globals& g, const Inputs& in, const std::string& mu_path, int n) {
  FactorCode c = in.load_code();
  auto mu = load_measure(mu_path, c.domain);
  json res;
  res["n"] = n;
  res["exact"] = mu.exact;
  json blocks;
  if (mu.exact) {
    for (auto& [w, p] : pushforward_blocks_exact(mu, c, n, g.cap))
      blocks[format_word(c.codomain, w)] = rat_to_string(p);
  } else {
    for (auto& [w, p] : pushforward_blocks(mu, c, n, g.cap))
      blocks[format_word(c.codomain, w)] = p;
  }
  res["blocks"] = std::move(blocks);
  return res;
}

json run_count(const Globals&, const Inputs& in, const std::string& word) {
  FactorCode c = in.load_code();
  Word y = parse_word(c.codomain, word);
  if (!word_allowed(c.codomain, y))
    throw validation_error("word '" + word + "' is not allowed in the image system");
  TransferFamily tf(c);
  BigInt count = tf.count(y);
  json res;
  res["word"] = format_word(c.codomain, y);
  res["count"] = count.str();
  std::vector<double> logs;
  if (tf.log_prefix_counts(y, logs)) {
    res["log_count"] = logs.back();
    res["log_prefix_counts"] = jvec(logs);
  } else {
    res["log_count"] = nullptr;
  }
  return res;
}

json run_clumps(const Globals& g, const Inputs& in, int k_max, int max_list) {
  FactorCode c = in.load_code();
  auto rep = clump_analysis(c, k_max, g.cap);
  json res;
  res["k_max"] = rep.k_max;
  if (rep.first_singleton)
    res["first_singleton"] = {{"k", rep.first_singleton->first},
                              {"word", format_word(c.codomain, rep.first_singleton->second)}};
  else
    res["first_singleton"] = nullptr;
  json levels = json::array();
  for (auto& lvl : rep.levels) {
    json l;
    l["k"] = lvl.k;
    l["min_count"] = lvl.min_count.str();
    l["singleton_count"] = lvl.singletons.size();
    json singles = json::array();
    for (auto& [y, x] : lvl.singletons) {
      if (static_cast<int>(singles.size()) >= max_list) break;
      singles.push_back(
          {{"y", format_word(c.codomain, y)}, {"x", format_word(c.domain, x)}});
    }
    l["singletons"] = std::move(singles);
    l["singletons_truncated"] = static_cast<int>(lvl.singletons.size()) > max_list;
    l["uncovered"] = jwords(c.codomain, lvl.uncovered);
    levels.push_back(std::move(l));
  }
  res["levels"] = std::move(levels);
  return res;
}

std::vector<int> charged_from(const FactorCode& c, const std::string& nu_path,
                              const std::string& orbit) {
  if (!nu_path.empty() && !orbit.empty())
    throw validation_error("give either --nu or --orbit, not both");
  if (!nu_path.empty()) return charged_symbols(load_measure(nu_path, c.codomain));
  if (!orbit.empty())
    return charged_symbols(make_periodic(c.codomain, parse_word(c.codomain, orbit)));
  throw validation_error("need --nu or --orbit to say which symbols carry mass");
}

json run_bound(const Globals&, const Inputs& in, const std::string& nu_path,
               const std::string& orbit) {
  FactorCode c = in.load_code();
  auto rep = bound_N(c, charged_from(c, nu_path, orbit));
  json res;
  res["N"] = rep.value;
  json fibers = json::array();
  for (auto& [sym, size] : rep.charged_fibers)
    fibers.push_back({{"symbol", sym}, {"fiber_size", size}});
  res["charged_fibers"] = std::move(fibers);
  return res;
}

NuSampler sampler_from(const FactorCode& c, const std::string& nu_path, const std::string& orbit,
                       const std::string& pushforward_of) {
  int given = !nu_path.empty();
  given += !orbit.empty();
  given += !pushforward_of.empty();
  if (given != 1)
    throw validation_error("need exactly one of --nu, --orbit, --pushforward-of");
  NuSampler s;
  if (!nu_path.empty()) {
    s.kind = NuSampler::Kind::markov;
    s.markov = load_measure(nu_path, c.codomain);
  } else if (!orbit.empty()) {
    s.kind = NuSampler::Kind::periodic;
    s.periodic = make_periodic(c.codomain, parse_word(c.codomain, orbit));
  } else {
    s.kind = NuSampler::Kind::pushforward;
    s.upstream = load_measure(pushforward_of, c.domain);
    s.code = c;
  }
  return s;
}

json run_relpressure(const Globals& g, const Inputs& in, const std::string& nu_path,
                     const std::string& orbit, const std::string& pushforward_of, int n,
                     uint64_t trials) {
  FactorCode c = in.load_code();
  auto sampler = sampler_from(c, nu_path, orbit, pushforward_of);
  auto rep = relative_entropy_over_nu(c, sampler, n, trials, g.seed);
  const double u = unit_scale(g);
  json res;
  res["n"] = rep.n;
  res["n_half"] = rep.n_half;
  res["trials"] = rep.trials;
  res["seed"] = rep.seed;
  if (rep.exact) {
    res["exact"] = u * *rep.exact;
  } else {
    res["exact"] = nullptr;
    res["finite_n"] = {{"mean", u * rep.finite_n_mean}, {"se", u * rep.finite_n_se}};
    res["refined"] = {{"mean", u * rep.refined_mean}, {"se", u * rep.refined_se}};
    std::vector<double> inc(rep.increment_means);
    for (auto& x : inc) x *= u;
    res["increment_means"] = jvec(inc);
  }
  return res;
}

json run_relmax_singleton(const Globals& g, const Inputs& in, const std::string& nu_path,
                          const std::string& clump, int L, double mass_threshold,
                          bool allow_low_mass, const std::string& cylinder) {
  FactorCode c = in.load_code();
  auto nu = load_measure(nu_path, c.codomain);
  int a = c.codomain.symbol_index(clump);
  if (a < 0) throw validation_error("unknown clump symbol '" + clump + "'");
  auto sys = build_induced(c, nu, a, L, mass_threshold, allow_low_mass);
  auto ab = abramov_entropy(sys);
  const double u = unit_scale(g);
  json res;
  res["clump"] = c.codomain.symbols[sys.clump];
  res["clump_preimage"] = c.domain.symbols[sys.clump_preimage];
  res["L"] = sys.L;
  res["exact"] = sys.exact;
  res["retained_mass"] = sys.retained;
  res["nu_clump"] = sys.nu_clump;
  json loops = json::array();
  for (auto& loop : sys.loops) {
    json l;
    l["y"] = format_word(c.codomain, loop.y_loop);
    l["prob"] = loop.prob;
    if (sys.exact) l["prob_rational"] = rat_to_string(loop.prob_q);
    l["J"] = loop.J();
    loops.push_back(std::move(l));
  }
  res["loops"] = std::move(loops);
  res["abramov"] = {{"h_induced", u * ab.h_induced},
                    {"h_mu", u * ab.h_mu},
                    {"h_nu", u * ab.h_nu},
                    {"h_rel", u * ab.h_rel}};
  if (!cylinder.empty()) {
    auto cp = cylinder_probability(sys, parse_word(c.domain, cylinder));
    json cyl;
    cyl["word"] = cylinder;
    cyl["prob"] = cp.prob;
    if (sys.exact) cyl["prob_rational"] = rat_to_string(cp.prob_q);
    cyl["loop_indices"] = cp.loop_indices;
    res["cylinder"] = std::move(cyl);
  }
  return res;
}

json run_relmax_periodic(const Globals& g, const Inputs& in, const std::string& orbit) {
  FactorCode c = in.load_code();
  auto rep = fiber_periodic(c, make_orbit(c.codomain, parse_word(c.codomain, orbit)));
  const double u = unit_scale(g);
  json res;
  res["orbit"] = format_word(c.codomain, rep.orbit.block);
  res["period"] = rep.orbit.period();
  res["vertex_count"] = rep.vertex_count;
  res["max_entropy_per_step"] = u * rep.max_entropy;
  res["argmax_count"] = rep.argmax_count;
  res["determinate"] = rep.determinate;
  json comps = json::array();
  for (auto& comp : rep.components)
    comps.push_back({{"vertices", comp.vertices},
                     {"lambda", comp.lambda},
                     {"entropy_per_step", u * comp.entropy_per_step},
                     {"trivial", comp.trivial}});
  res["components"] = std::move(comps);
  return res;
}

json run_relmax_homclump(const Globals& g, const Inputs& in, const std::string& K_text,
                         const std::string& nu_path) {
  Rat K;
  if (!K_text.empty()) {
    K = parse_rational(K_text);
  } else if (!nu_path.empty()) {
    Sft y = in.load_system();
    auto nu = load_measure(nu_path, y);
    int a = y.symbol_index("a"), b = y.symbol_index("b");
    if (a < 0 || b < 0)
      throw validation_error("K extraction expects image symbols named a and b");
    K = homclump_K(nu, a, b);
  } else {
    throw validation_error("need --K or --nu");
  }
  auto f = homclump_family(K);
  const double u = unit_scale(g);
  json res;
  res["K"] = rat_to_string(f.K);
  res["x"] = rat_to_string(f.x);
  res["x_double"] = to_double(f.x);
  res["symbols"] = f.induced.symbols;
  res["transition"] = jmatq(f.mu_a.Pq);
  res["fixed_vector"] = jvecq(f.fixed_q);
  res["fixed_vector_double"] = jvec(f.fixed);
  res["type_masses"] = {{"aa", rat_to_string(f.K / (f.K + 1))},
                        {"aba", rat_to_string(Rat(1) / (f.K + 1))}};
  res["induced_entropy"] = u * entropy(f.mu_a);
  return res;
}

json run_relmax_optimize(const Globals& g, const Inputs& in, const std::string& nu_path,
                         int order, int restarts) {
  FactorCode c = in.load_code();
  auto nu = load_measure(nu_path, c.codomain);
  auto res_opt = fiber_entropy_optimizer(c, nu, order, g.seed, restarts);
  const double u = unit_scale(g);
  json res;
  res["order"] = res_opt.order;
  res["entropy"] = u * res_opt.entropy;
  res["feasibility"] = res_opt.feasibility;
  res["best_restart"] = res_opt.best_restart;
  res["restarts"] = res_opt.restarts;
  res["seed"] = res_opt.seed;
  res["symbols"] = res_opt.presentation.sft.symbols;
  res["transition"] = jmat(res_opt.Q);
  res["stationary"] = jvec(res_opt.stationary);
  return res;
}

json run_join_orthogonality(const Globals& g, const Inputs& in, const std::string& mu1_path,
                            const std::string& mu2_path, std::vector<int> ns, int trials,
                            bool skip_check) {
  FactorCode c = in.load_code();
  auto mu1 = load_measure(mu1_path, c.domain);
  auto mu2 = load_measure(mu2_path, c.domain);
  auto rep = orthogonality_experiment(c, mu1, mu2, ns, trials, g.seed, skip_check);
  json res;
  res["trials"] = rep.trials;
  res["seed"] = rep.seed;
  json rows = json::array();
  for (auto& row : rep.rows)
    rows.push_back({{"n", row.n},
                    {"center", row.center},
                    {"center_se", row.center_se},
                    {"anywhere", row.anywhere}});
  res["rows"] = std::move(rows);
  return res;
}

std::vector<int> load_lift(const std::string& path, const FactorCode& c) {
  // same `map:` format, but read as image symbol -> lift symbol
  FactorCode rev = parse_code(read_file(path), c.codomain, c.domain);
  return rev.map;
}

json run_join_interleave(const Globals& g, const Inputs& in, const std::string& nu_path,
                         const std::string& lift1_path, const std::string& lift2_path,
                         long length, int order, int chunk) {
  FactorCode c = in.load_code();
  auto nu = load_measure(nu_path, c.codomain);
  auto l1 = load_lift(lift1_path, c);
  auto l2 = load_lift(lift2_path, c);
  auto rep = interleave_stream_experiment(c, nu, l1, l2, length, g.seed, order, chunk);
  const double u = unit_scale(g);
  json res;
  res["steps"] = rep.steps;
  res["order"] = rep.order;
  res["chunk"] = rep.chunk;
  res["seed"] = rep.seed;
  res["h_hat"] = u * rep.h_hat;
  res["ci"] = {u * rep.lo, u * rep.hi};
  res["h_nu"] = u * rep.h_nu;
  res["switches"] = rep.switches;
  res["switch_rate"] = static_cast<double>(rep.switches) / rep.steps;
  return res;
}

json run_join_posterior(const Globals& g, const Inputs& in, const std::string& mu_path,
                        const std::string& word, int samples) {
  FactorCode c = in.load_code();
  auto mu = load_measure(mu_path, c.domain);
  Word y = parse_word(c.codomain, word);
  auto post = posterior(mu, c, y);
  json res;
  res["word"] = format_word(c.codomain, y);
  res["log_prob_nats"] = post.log_prob;
  json positions = json::array();
  for (size_t t = 0; t < post.states.size(); ++t) {
    json marginal;
    for (size_t j = 0; j < post.states[t].size(); ++j)
      marginal[c.domain.symbols[post.states[t][j]]] = post.gamma[t][j];
    positions.push_back({{"t", t}, {"marginal", std::move(marginal)}});
  }
  res["positions"] = std::move(positions);
  if (mu.exact) {
    auto pe = posterior_exact(mu, c, y);
    res["prob_rational"] = rat_to_string(pe.prob);
    json positions_q = json::array();
    for (size_t t = 0; t < pe.states.size(); ++t) {
      json marginal;
      for (size_t j = 0; j < pe.states[t].size(); ++j)
        marginal[c.domain.symbols[pe.states[t][j]]] = rat_to_string(pe.gamma[t][j]);
      positions_q.push_back({{"t", t}, {"marginal", std::move(marginal)}});
    }
    res["positions_rational"] = std::move(positions_q);
  }
  if (samples > 0) {
    std::map<std::string, int> counts;
    for (int k = 0; k < samples; ++k) {
      Rng rng(derive_seed(g.seed, k));
      counts[format_word(c.domain, post.sample(rng))]++;
    }
    res["samples"] = {{"count", samples}, {"paths", json(counts)}};
  }
  return res;
}

json run_gallery_list(const Globals&) {
  json entries = json::array();
  for (auto& e : gallery())
    entries.push_back({{"name", e.name},
                       {"note", e.note},
                       {"x_symbols", e.code.domain.symbols},
                       {"y_symbols", e.code.codomain.symbols}});
  return json{{"entries", std::move(entries)}};
}

json run_gallery_check(const Globals&) {
  bool all_ok = true;
  json entries = json::array();
  for (auto& e : gallery()) {
    json checks = json::array();
    bool ok = true;
    for (auto& c : self_check(e)) {
      checks.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
      ok = ok && c.ok;
    }
    all_ok = all_ok && ok;
    entries.push_back({{"name", e.name}, {"ok", ok}, {"checks", std::move(checks)}});
  }
  return json{{"ok", all_ok}, {"entries", std::move(entries)}};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

json run_gallery_export(const Globals&, const std::string& out_dir) {
  if (out_dir.empty()) throw validation_error("need --out DIRECTORY");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create directory '" + out_dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    auto path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw io_error("cannot write '" + path.string() + "'");
  };
  json files = json::array();
  for (auto& e : gallery()) {
    std::string base = lower(e.name);
    write(base + ".x.sft", print_sft(e.code.domain));
    write(base + ".y.sft", print_sft(e.code.codomain));
    write(base + ".code", print_code(e.code));
    files.push_back(base + ".x.sft");
    files.push_back(base + ".y.sft");
    files.push_back(base + ".code");
  }
  return json{{"directory", out_dir}, {"files", std::move(files)}};
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  if (const char* env = std::getenv("RELENT_SEED")) {
    try {
      g.seed = std::stoull(env);
    } catch (...) {
      emit_error(validation_error("RELENT_SEED is not a valid unsigned integer"));
      return 2;
    }
  }

  CLI::App app{"measures of maximal relative entropy over 1-block factor maps"};
  app.require_subcommand(1);
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"json", "tsv"}))
      ->capture_default_str();
  app.add_option("--unit", g.unit, "unit for entropy-like outputs")
      ->check(CLI::IsMember({"nat", "bit"}))
      ->capture_default_str();
  app.add_option("--seed", g.seed, "random seed (default: RELENT_SEED env, else 0)")
      ->capture_default_str();
  app.add_option("--cap", g.cap, "enumeration size cap")->capture_default_str();

  std::string command;
  json params, results;
  auto ran = [&](const std::string& name, json p, json r) {
    command = name;
    params = std::move(p);
    results = std::move(r);
  };

  // validate
  {
    auto* sub = app.add_subcommand("validate", "check systems, a code, and image coverage");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    sub->add_option("--side", in->side, "which gallery system when validating one side")
        ->check(CLI::IsMember({"x", "y"}));
    auto n_max = std::make_shared<int>(8);
    sub->add_option("--n", *n_max, "image coverage depth")->capture_default_str();
    sub->callback([&, in, n_max] {
      json p = in->echo();
      p["n"] = *n_max;
      ran("validate", p, run_validate(g, *in, *n_max));
    });
  }

  // parry
  {
    auto* sub = app.add_subcommand("parry", "maximal-entropy measure of an irreducible system");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_system_options(sub);
    sub->callback([&, in] { ran("parry", in->echo(), run_parry(g, *in)); });
  }

  // entropy
  {
    auto* sub = app.add_subcommand("entropy", "entropy rate of a Markov measure");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_system_options(sub);
    auto mu = std::make_shared<std::string>();
    auto alpha = std::make_shared<double>(-1.0);
    auto h_img = std::make_shared<double>(0.0);
    sub->add_option("--mu", *mu, "measure file")->required();
    sub->add_option("--alpha", *alpha, "weight for the image term (enables weighted output)");
    sub->add_option("--image-entropy", *h_img,
                    "image entropy value used by --alpha, in the output unit");
    sub->callback([&, in, mu, alpha, h_img] {
      json p = in->echo();
      p["mu"] = *mu;
      if (*alpha >= 0) {
        p["alpha"] = *alpha;
        p["image_entropy"] = *h_img;
      }
      ran("entropy", p, run_entropy(g, *in, *mu, *alpha, *h_img));
    });
  }

  // pushforward
  {
    auto* sub = app.add_subcommand("pushforward", "image block distribution of a lifted measure");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    auto mu = std::make_shared<std::string>();
    auto n = std::make_shared<int>(4);
    sub->add_option("--mu", *mu, "measure file on the domain")->required();
    sub->add_option("--n", *n, "block length")->capture_default_str();
    sub->callback([&, in, mu, n] {
      json p = in->echo();
      p["mu"] = *mu;
      p["n"] = *n;
      ran("pushforward", p, run_pushforward(g, *in, *mu, *n));
    });
  }

  // count
  {
    auto* sub = app.add_subcommand("count", "exact preimage count of an image word");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    auto word = std::make_shared<std::string>();
    sub->add_option("--word", *word, "image word")->required();
    sub->callback([&, in, word] {
      json p = in->echo();
      p["word"] = *word;
      ran("count", p, run_count(g, *in, *word));
    });
  }

  // clumps
  {
    auto* sub = app.add_subcommand("clumps", "fiber sizes of recoded blocks, singleton census");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    auto kmax = std::make_shared<int>(8);
    auto max_list = std::make_shared<int>(50);
    sub->add_option("--kmax", *kmax, "largest block length")->capture_default_str();
    sub->add_option("--max-list", *max_list, "cap on listed singletons per level")
        ->capture_default_str();
    sub->callback([&, in, kmax, max_list] {
      json p = in->echo();
      p["kmax"] = *kmax;
      p["max_list"] = *max_list;
      ran("clumps", p, run_clumps(g, *in, *kmax, *max_list));
    });
  }

  // bound
  {
    auto* sub = app.add_subcommand("bound", "minimum charged fiber size (lift count bound)");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    auto nu = std::make_shared<std::string>();
    auto orbit = std::make_shared<std::string>();
    sub->add_option("--nu", *nu, "image measure file");
    sub->add_option("--orbit", *orbit, "periodic image word");
    sub->callback([&, in, nu, orbit] {
      json p = in->echo();
      if (!nu->empty()) p["nu"] = *nu;
      if (!orbit->empty()) p["orbit"] = *orbit;
      ran("bound", p, run_bound(g, *in, *nu, *orbit));
    });
  }

  // relpressure
  {
    auto* sub = app.add_subcommand(
        "relpressure", "Monte-Carlo relative entropy of the fiber over a sampled image");
    sub->fallthrough();
    auto in = std::make_shared<Inputs>();
    in->add_code_options(sub);
    auto nu = std::make_shared<std::string>();
    auto orbit = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto n = std::make_shared<int>(64);
    auto trials = std::make_shared<uint64_t>(10000);
    sub->add_option("--nu", *nu, "image measure file");
    sub->add_option("--orbit", *orbit, "periodic image word (computed exactly)");
    sub->add_option("--pushforward-of", *pf, "domain measure whose image is sampled");
    sub->add_option("--n", *n, "window length")->capture_default_str();
    sub->add_option("--trials", *trials, "sample count")->capture_default_str();
    sub->callback([&, in, nu, orbit, pf, n, trials] {
      json p = in->echo();
      if (!nu->empty()) p["nu"] = *nu;
      if (!orbit->empty()) p["orbit"] = *orbit;
      if (!pf->empty()) p["pushforward_of"] = *pf;
      p["n"] = *n;
      p["trials"] = *trials;
      p["seed"] = g.seed;
      ran("relpressure", p, run_relpressure(g, *in, *nu, *orbit, *pf, *n, *trials));
    });
  }

  // relmax
  {
    auto* relmax = app.add_subcommand("relmax", "relatively maximal measures");
    relmax->require_subcommand(1);
    relmax->fallthrough();

    {
      auto* sub = relmax->add_subcommand(
          "singleton", "maximal lift over a singleton clump via return words");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto nu = std::make_shared<std::string>();
      auto clump = std::make_shared<std::string>();
      auto L = std::make_shared<int>(40);
      auto mass = std::make_shared<double>(1.0 - 1e-6);
      auto allow = std::make_shared<bool>(false);
      auto cylinder = std::make_shared<std::string>();
      sub->add_option("--nu", *nu, "image measure file")->required();
      sub->add_option("--clump", *clump, "image symbol with a one-point fiber")->required();
      sub->add_option("--L", *L, "return word truncation length")->capture_default_str();
      sub->add_option("--mass-threshold", *mass, "required retained mass")
          ->capture_default_str();
      sub->add_flag("--allow-low-mass", *allow, "accept a truncation below the threshold");
      sub->add_option("--cylinder", *cylinder,
                      "domain word (clump preimage to clump preimage) to price");
      sub->callback([&, in, nu, clump, L, mass, allow, cylinder] {
        json p = in->echo();
        p["nu"] = *nu;
        p["clump"] = *clump;
        p["L"] = *L;
        p["mass_threshold"] = *mass;
        p["allow_low_mass"] = *allow;
        if (!cylinder->empty()) p["cylinder"] = *cylinder;
        ran("relmax singleton", p,
            run_relmax_singleton(g, *in, *nu, *clump, *L, *mass, *allow, *cylinder));
      });
    }

    {
      auto* sub = relmax->add_subcommand("periodic", "fiber components over a periodic image");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto orbit = std::make_shared<std::string>();
      sub->add_option("--orbit", *orbit, "periodic image word")->required();
      sub->callback([&, in, orbit] {
        json p = in->echo();
        p["orbit"] = *orbit;
        ran("relmax periodic", p, run_relmax_periodic(g, *in, *orbit));
      });
    }

    {
      auto* sub = relmax->add_subcommand(
          "homclump", "closed-form maximal lift for the homogeneous two-loop clump family");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_system_options(sub);
      auto K = std::make_shared<std::string>();
      auto nu = std::make_shared<std::string>();
      sub->add_option("--K", *K, "loop-type mass ratio, e.g. 3/2 or 1.5");
      sub->add_option("--nu", *nu, "image measure file to extract K from");
      sub->callback([&, in, K, nu] {
        json p = in->echo();
        if (!K->empty()) p["K"] = *K;
        if (!nu->empty()) p["nu"] = *nu;
        ran("relmax homclump", p, run_relmax_homclump(g, *in, *K, *nu));
      });
    }

    {
      auto* sub = relmax->add_subcommand(
          "optimize", "gradient search for the maximal-entropy Markov lift at a block order");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto nu = std::make_shared<std::string>();
      auto order = std::make_shared<int>(1);
      auto restarts = std::make_shared<int>(16);
      sub->add_option("--nu", *nu, "image measure file")->required();
      sub->add_option("--order", *order, "block order of the search space (1..3)")
          ->capture_default_str();
      sub->add_option("--restarts", *restarts, "random restarts")->capture_default_str();
      sub->callback([&, in, nu, order, restarts] {
        json p = in->echo();
        p["nu"] = *nu;
        p["order"] = *order;
        p["restarts"] = *restarts;
        p["seed"] = g.seed;
        ran("relmax optimize", p, run_relmax_optimize(g, *in, *nu, *order, *restarts));
      });
    }
  }

  // join
  {
    auto* join = app.add_subcommand("join", "relatively independent joinings of two lifts");
    join->require_subcommand(1);
    join->fallthrough();

    {
      auto* sub = join->add_subcommand(
          "orthogonality", "coincidence frequencies of two lifts of the same image measure");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto mu1 = std::make_shared<std::string>();
      auto mu2 = std::make_shared<std::string>();
      auto ns = std::make_shared<std::vector<int>>(std::vector<int>{8, 16, 32, 64});
      auto trials = std::make_shared<int>(10000);
      auto skip = std::make_shared<bool>(false);
      sub->add_option("--mu1", *mu1, "first lift measure file")->required();
      sub->add_option("--mu2", *mu2, "second lift measure file")->required();
      sub->add_option("--ns", *ns, "window lengths")->delimiter(',')->capture_default_str();
      sub->add_option("--trials", *trials, "samples per window length")->capture_default_str();
      sub->add_flag("--skip-pushforward-check", *skip,
                    "skip verifying the lifts share a pushforward");
      sub->callback([&, in, mu1, mu2, ns, trials, skip] {
        json p = in->echo();
        p["mu1"] = *mu1;
        p["mu2"] = *mu2;
        p["ns"] = *ns;
        p["trials"] = *trials;
        p["seed"] = g.seed;
        p["skip_pushforward_check"] = *skip;
        ran("join orthogonality", p,
            run_join_orthogonality(g, *in, *mu1, *mu2, *ns, *trials, *skip));
      });
    }

    {
      auto* sub = join->add_subcommand(
          "interleave-entropy",
          "entropy of the switched interleaving of two deterministic lifts");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto nu = std::make_shared<std::string>();
      auto lift1 = std::make_shared<std::string>();
      auto lift2 = std::make_shared<std::string>();
      auto length = std::make_shared<long>(1000000);
      auto order = std::make_shared<int>(3);
      auto chunk = std::make_shared<int>(4096);
      sub->add_option("--nu", *nu, "image measure file")->required();
      sub->add_option("--lift1", *lift1, "first lift map file (image -> domain)")->required();
      sub->add_option("--lift2", *lift2, "second lift map file (image -> domain)")->required();
      sub->add_option("--length", *length, "stream length")->capture_default_str();
      sub->add_option("--nmax,--order", *order, "conditioning depth of the estimator")
          ->capture_default_str();
      sub->add_option("--chunk", *chunk, "segment length for the bootstrap")
          ->capture_default_str();
      sub->callback([&, in, nu, lift1, lift2, length, order, chunk] {
        json p = in->echo();
        p["nu"] = *nu;
        p["lift1"] = *lift1;
        p["lift2"] = *lift2;
        p["length"] = *length;
        p["order"] = *order;
        p["chunk"] = *chunk;
        p["seed"] = g.seed;
        ran("join interleave-entropy", p,
            run_join_interleave(g, *in, *nu, *lift1, *lift2, *length, *order, *chunk));
      });
    }

    {
      auto* sub = join->add_subcommand(
          "posterior", "conditional distribution of lift paths over an image window");
      sub->fallthrough();
      auto in = std::make_shared<Inputs>();
      in->add_code_options(sub);
      auto mu = std::make_shared<std::string>();
      auto word = std::make_shared<std::string>();
      auto samples = std::make_shared<int>(0);
      sub->add_option("--mu", *mu, "lift measure file")->required();
      sub->add_option("--word", *word, "image word")->required();
      sub->add_option("--sample", *samples, "also draw this many lift paths")
          ->capture_default_str();
      sub->callback([&, in, mu, word, samples] {
        json p = in->echo();
        p["mu"] = *mu;
        p["word"] = *word;
        p["sample"] = *samples;
        p["seed"] = g.seed;
        ran("join posterior", p, run_join_posterior(g, *in, *mu, *word, *samples));
      });
    }
  }

  // gallery
  {
    auto* gal = app.add_subcommand("gallery", "built-in worked examples");
    gal->require_subcommand(1);
    gal->fallthrough();

    {
      auto* sub = gal->add_subcommand("list", "names and notes");
      sub->fallthrough();
      sub->callback([&] { ran("gallery list", json::object(), run_gallery_list(g)); });
    }
    {
      auto* sub = gal->add_subcommand("check", "re-verify every documented fact");
      sub->fallthrough();
      sub->callback([&] { ran("gallery check", json::object(), run_gallery_check(g)); });
    }
    {
      auto* sub = gal->add_subcommand("export", "write all entries as text files");
      sub->fallthrough();
      auto out = std::make_shared<std::string>();
      sub->add_option("--out", *out, "output directory")->required();
      sub->callback([&, out] {
        json p;
        p["out"] = *out;
        ran("gallery export", p, run_gallery_export(g, *out));
      });
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error(Error("usage", e.what()));
    return 2;
  } catch (const Error& e) {
    emit_error(e);
    return e.kind == "io" ? 3 : 2;
  } catch (const std::exception& e) {
    emit_error(Error("internal", e.what()));
    return 2;
  }

  params["seed"] = g.seed;
  params["cap"] = g.cap;
  emit(g, command, std::move(params), std::move(results));
  return 0;
}
