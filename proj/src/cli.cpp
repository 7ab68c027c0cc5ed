#include "lowtail/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lowtail/csv.hpp"
#include "lowtail/errors.hpp"
#include "lowtail/galton_watson.hpp"
#include "lowtail/gw_tails.hpp"
#include "lowtail/intersection.hpp"
#include "lowtail/offspring.hpp"
#include "lowtail/parallel.hpp"
#include "lowtail/walks.hpp"

namespace lowtail::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> msgs)
        : std::runtime_error("config error"), messages(std::move(msgs)) {}
    std::vector<std::string> messages;
};

// Option values resolved with flag-over-config precedence; collects the
// effective settings for the CSV hash footer.
class Options {
public:
    Options(const CLI::App* cmd, std::map<std::string, std::string> kv)
        : cmd_(cmd), kv_(std::move(kv)) {}

    std::string get_string(const std::string& key, const std::string& flag_value,
                           const std::string& fallback) {
        std::string v = fallback;
        if (auto it = kv_.find(key); it != kv_.end()) v = it->second;
        if (cmd_->count("--" + key) > 0) v = flag_value;
        effective_[key] = v;
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t flag_value,
                          std::uint64_t fallback) {
        std::uint64_t v = fallback;
        if (auto it = kv_.find(key); it != kv_.end()) v = parse_u64(key, it->second);
        if (cmd_->count("--" + key) > 0) v = flag_value;
        effective_[key] = std::to_string(v);
        return v;
    }

    long get_int(const std::string& key, long flag_value, long fallback) {
        long v = fallback;
        if (auto it = kv_.find(key); it != kv_.end()) v = parse_long(key, it->second);
        if (cmd_->count("--" + key) > 0) v = flag_value;
        effective_[key] = std::to_string(v);
        return v;
    }

    double get_double(const std::string& key, double flag_value, double fallback) {
        double v = fallback;
        if (auto it = kv_.find(key); it != kv_.end()) v = parse_double(key, it->second);
        if (cmd_->count("--" + key) > 0) v = flag_value;
        effective_[key] = format_double(v);
        return v;
    }

    /// Canonical sorted key=value text of everything resolved so far,
    /// excluding presentation-only keys so reruns with a different thread
    /// count or output path hash identically.
    std::string canonical() const {
        std::string text;
        for (const auto& [k, v] : effective_) {
            if (k == "threads" || k == "out") continue;
            text += k + "=" + v + "\n";
        }
        return text;
    }

private:
    static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const auto out = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw ConfigError({"config: bad unsigned value for '" + key + "': " + v});
        }
    }
    static long parse_long(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const auto out = std::stol(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw ConfigError({"config: bad integer value for '" + key + "': " + v});
        }
    }
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const auto out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw ConfigError({"config: bad real value for '" + key + "': " + v});
        }
    }

    const CLI::App* cmd_;
    std::map<std::string, std::string> kv_;
    std::map<std::string, std::string> effective_;
};

void write_artifact(const std::string& path, const std::string& payload) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << payload;
}

std::string pass_fail(bool ok) { return ok ? "[PASS]" : "[FAIL]"; }

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(sep);
        out += format_double(v[i]);
    }
    return out;
}

} // namespace

std::map<std::string, std::string> parse_config_text(
    const std::string& text, const std::set<std::string>& allowed_keys,
    std::vector<std::string>& errors) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        if (!allowed_keys.count(key)) {
            errors.push_back("line " + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
            continue;
        }
        kv[key] = value;
    }
    return kv;
}

namespace {

std::map<std::string, std::string> load_config(const std::string& path,
                                               const std::set<std::string>& allowed) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
    std::stringstream buf;
    buf << in.rdbuf();
    std::vector<std::string> errors;
    auto kv = parse_config_text(buf.str(), allowed, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return kv;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct FlagValues {
    std::string dist;
    std::string out;
    std::string config;
    std::string method = "density";
    std::string stop = "exit";
    std::string side = "min";
    std::string q_list;
    std::string a_grid;
    std::uint64_t seed = 0;
    std::uint64_t budget = 0;
    long threads = 1;
    long level = 0;
    long iterations = 60;
    long depth = 30;
    long eta = 2;
    long m = 2;
    long upper = 1;
    long eps_sites = 16;
    long n_coarse = 2;
    long fine_offset = 6;
    double horizon = 1.0;
    double tolerance = 0.15;
    double eps_min = 0.0;
    double eps_max = 0.0;
    double x_scale = 1.0;
};

void add_common_flags(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--dist", f.dist, "offspring law, e.g. \"pmf: 1:0.5, 2:0.5\"");
    cmd->add_option("--seed", f.seed, "base RNG seed");
    cmd->add_option("--threads", f.threads, "worker threads");
    cmd->add_option("--out", f.out, "CSV output path");
    cmd->add_option("--budget", f.budget, "Monte Carlo sample count");
    cmd->add_option("--level", f.level, "dyadic grid level");
    cmd->add_option("--config", f.config, "key = value config file");
}

int cmd_params(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"distribution", "seed", "threads", "out"};
    Options opt(cmd, load_config(f.config, keys));
    const std::string spec = opt.get_string("distribution", f.dist, f.dist);
    if (spec.empty()) throw ConfigError({"params: --dist is required"});

    const auto dist = OffspringDistribution::parse(spec);
    const auto params = derive_params(dist);
    std::ostringstream csv;
    csv << "key,value\n";
    csv << "mu," << format_double(params.mu) << "\n";
    csv << "p1," << format_double(params.p1) << "\n";
    csv << "nu," << params.nu << "\n";
    csv << "regime," << (params.regime == Regime::schroeder ? "Schroeder" : "Boettcher")
        << "\n";
    if (params.regime == Regime::schroeder) {
        csv << "tau," << format_double(params.tau) << "\n";
    } else {
        csv << "beta," << format_double(params.beta) << "\n";
        csv << "beta_ratio," << format_double(params.beta_ratio) << "\n";
    }
    csv << csv_footer(opt.canonical(), 0);
    write_artifact(f.out, csv.str());

    std::cout << "mu=" << format_double(params.mu)
              << " p1=" << format_double(params.p1) << " nu=" << params.nu
              << " regime="
              << (params.regime == Regime::schroeder ? "Schroeder" : "Boettcher");
    if (params.regime == Regime::schroeder)
        std::cout << " tau=" << format_double(params.tau);
    else
        std::cout << " beta=" << format_double(params.beta)
                  << " beta/(1-beta)=" << format_double(params.beta_ratio);
    std::cout << "\n";
    return 0;
}

int cmd_prune(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"distribution", "out"};
    Options opt(cmd, load_config(f.config, keys));
    const std::string spec = opt.get_string("distribution", f.dist, f.dist);
    if (spec.empty()) throw ConfigError({"prune: --dist is required"});

    const auto dist = OffspringDistribution::parse(spec);
    const auto reduced = prune(dist);
    std::ostringstream csv;
    csv << "k,p\n";
    if (!reduced.is_geometric())
        for (std::size_t k = 0; k < reduced.pmf().size(); ++k) {
            if (reduced.pmf()[k] <= 0.0) continue;
            csv << k << ',' << format_double(reduced.pmf()[k]) << '\n';
        }
    csv << csv_footer(opt.canonical(), 0);
    write_artifact(f.out, csv.str());
    std::cout << reduced.to_text() << "\n";
    std::cout << "extinction_probability=" << format_double(extinction_probability(dist))
              << " mean=" << format_double(reduced.mean()) << "\n";
    return 0;
}

int cmd_gw_density(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"distribution", "iterations", "out", "seed",
                                     "threads"};
    Options opt(cmd, load_config(f.config, keys));
    const std::string spec = opt.get_string("distribution", f.dist, f.dist);
    if (spec.empty()) throw ConfigError({"gw-density: --dist is required"});
    const int iterations = int(opt.get_int("iterations", f.iterations, 60));

    auto dist = OffspringDistribution::parse(spec);
    if (dist.p0() > 0.0) dist = prune(dist);
    const DensityGrid density = density_fixed_point(dist, GridSpec{}, iterations);

    std::ostringstream csv;
    density.write_csv(csv);
    csv << csv_footer(opt.canonical(), 0);
    write_artifact(f.out, csv.str());

    std::cout << "iterations=" << iterations << " mean=" << format_double(density.mean())
              << " P(W<0.5)=" << format_double(density.tail_below(0.5))
              << " overflow=" << format_double(density.overflow_mass())
              << " tv=" << format_double(density.last_tv())
              << (density.converged() ? " converged" : " not-converged") << "\n";
    return 0;
}

int cmd_gw_tail(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"distribution", "method",  "budget",
                                     "seed",         "threads", "iterations",
                                     "depth",        "out",     "tolerance",
                                     "eps_min",      "eps_max"};
    Options opt(cmd, load_config(f.config, keys));
    const std::string spec = opt.get_string("distribution", f.dist, f.dist);
    if (spec.empty()) throw ConfigError({"gw-tail: --dist is required"});

    Theorem1Config cfg;
    const std::string method = opt.get_string("method", f.method, "density");
    if (method == "mc")
        cfg.method = Theorem1Method::mc;
    else if (method == "density")
        cfg.method = Theorem1Method::density;
    else if (method == "conditioned_mc")
        cfg.method = Theorem1Method::conditioned_mc;
    else
        throw ConfigError({"gw-tail: unknown method '" + method + "'"});
    cfg.budget = opt.get_u64("budget", f.budget, 100'000);
    cfg.seed = opt.get_u64("seed", f.seed, 0);
    cfg.threads = int(opt.get_int("threads", f.threads, 1));
    cfg.iterations = int(opt.get_int("iterations", f.iterations, 60));
    cfg.mc_depth = int(opt.get_int("depth", f.depth, 30));
    const double tolerance = opt.get_double("tolerance", f.tolerance, 0.15);
    const double eps_min = opt.get_double("eps_min", f.eps_min, 0.0);
    const double eps_max = opt.get_double("eps_max", f.eps_max, 0.0);

    auto dist = OffspringDistribution::parse(spec);
    if (eps_min > 0.0 || eps_max > 0.0) {
        const auto params = derive_params(dist.p0() > 0.0 ? prune(dist) : dist);
        const double base = params.regime == Regime::schroeder
                                ? 1.0 / params.mu
                                : double(params.nu) / params.mu;
        for (int n = 1; n <= 60; ++n) {
            const double eps = std::pow(base, double(n));
            if (eps_max > 0.0 && eps > eps_max) continue;
            if (eps_min > 0.0 && eps < eps_min) break;
            cfg.eps_grid.push_back(eps);
        }
    }

    const TailEstimate est = experiment_theorem1(dist, cfg);
    std::ostringstream csv;
    est.write_csv(csv);
    csv << csv_footer(opt.canonical(), cfg.seed);
    write_artifact(f.out, csv.str());

    const bool ok = std::abs(est.fit.slope - est.target_exponent) <= tolerance;
    std::cout << "method=" << method << " slope=" << format_double(est.fit.slope)
              << " stderr=" << format_double(est.fit.slope_stderr)
              << " target=" << format_double(est.target_exponent)
              << " tolerance=" << format_double(tolerance) << " " << pass_fail(ok)
              << "\n";
    return 0;
}

int cmd_bm_green(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"level", "budget", "seed", "threads", "out",
                                     "tolerance"};
    Options opt(cmd, load_config(f.config, keys));
    const int level = int(opt.get_int("level", f.level, 7));
    const std::uint64_t budget = opt.get_u64("budget", f.budget, 20'000);
    const std::uint64_t seed = opt.get_u64("seed", f.seed, 0);
    const int threads = int(opt.get_int("threads", f.threads, 1));
    const double tolerance = opt.get_double("tolerance", f.tolerance, 0.02);

    const int barrier = 1 << level;
    const auto sizes = batch_sizes(budget);
    auto batches = run_work_items<std::vector<std::uint64_t>>(
        seed, 0, sizes.size(), threads, [&](std::size_t b, RngStream& rng) {
            std::vector<std::uint64_t> sums(std::size_t(2 * barrier + 1), 0);
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                const EmbeddedWalk w = simulate_exit_walk(level, 0, rng);
                for (std::size_t s = 0; s < w.visits.size(); ++s)
                    sums[s] += w.visits[s];
            }
            return sums;
        });
    std::vector<std::uint64_t> total(std::size_t(2 * barrier + 1), 0);
    for (const auto& b : batches)
        for (std::size_t s = 0; s < total.size(); ++s) total[s] += b[s];

    const double scale = std::ldexp(1.0, -level) / double(budget);
    double sup_err = 0.0;
    std::ostringstream csv;
    csv << "site,x,L_hat\n";
    for (std::size_t s = 0; s < total.size(); ++s) {
        const int site = int(s) - barrier;
        const double x = double(site) * std::ldexp(1.0, -level);
        const double value = scale * double(total[s]);
        sup_err = std::max(sup_err, std::abs(value - (1.0 - std::abs(x))));
        csv << site << ',' << format_double(x) << ',' << format_double(value) << '\n';
    }
    csv << csv_footer(opt.canonical(), seed);
    write_artifact(f.out, csv.str());

    std::cout << "level=" << level << " runs=" << budget
              << " sup_error=" << format_double(sup_err)
              << " tolerance=" << format_double(tolerance) << " "
              << pass_fail(sup_err < tolerance) << "\n";
    return 0;
}

IltFunctional make_functional(int m, const std::vector<double>& q,
                              const std::string& stop, double horizon) {
    IltFunctional fn;
    fn.m = m;
    fn.q = q;
    if (fn.q.empty()) fn.q.assign(std::size_t(m), 1.0);
    if (stop == "exit")
        fn.stop = StopRule::exit_unit_interval;
    else if (stop == "fixed")
        fn.stop = StopRule::fixed_steps;
    else
        throw ConfigError({"stop rule must be 'exit' or 'fixed', got '" + stop + "'"});
    fn.horizon = horizon;
    fn.validate();
    return fn;
}

int cmd_ilt_tail(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"m",    "q",       "stop",      "horizon",
                                     "level", "budget", "seed",      "threads",
                                     "out",   "tolerance"};
    Options opt(cmd, load_config(f.config, keys));
    const int m = int(opt.get_int("m", f.m, 2));
    const auto q = parse_double_list(opt.get_string("q", f.q_list, "1,1"));
    const std::string stop = opt.get_string("stop", f.stop, "exit");
    const double horizon = opt.get_double("horizon", f.horizon, 1.0);
    const int level = int(opt.get_int("level", f.level, 9));
    McRun run;
    run.budget = opt.get_u64("budget", f.budget, 100'000);
    run.seed = opt.get_u64("seed", f.seed, 0);
    run.threads = int(opt.get_int("threads", f.threads, 1));
    const double tolerance = opt.get_double("tolerance", f.tolerance, 0.15);

    const IltFunctional fn = make_functional(m, q, stop, horizon);
    const TailEstimate est = estimate_tail(fn, level, {}, run);

    std::ostringstream csv;
    est.write_csv(csv, "m,q_list,stop_rule,level",
                  std::to_string(m) + "," + join_doubles(fn.q, ';') + "," + stop +
                      "," + std::to_string(level));
    csv << csv_footer(opt.canonical(), run.seed);
    write_artifact(f.out, csv.str());

    const bool ok = std::abs(est.fit.slope - est.target_exponent) <= tolerance;
    std::cout << "m=" << m << " q=" << join_doubles(fn.q, ';') << " stop=" << stop
              << " slope=" << format_double(est.fit.slope)
              << " target=" << format_double(est.target_exponent)
              << " tolerance=" << format_double(tolerance) << " " << pass_fail(ok)
              << "\n";
    return 0;
}

int cmd_silt_tail(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"q",      "level", "budget",      "seed",
                                     "threads", "out",  "n_coarse",    "tolerance",
                                     "fine_offset"};
    Options opt(cmd, load_config(f.config, keys));
    const auto q_list = parse_double_list(opt.get_string("q", f.q_list, "2"));
    const double q = q_list.empty() ? 2.0 : q_list[0];
    const int level = int(opt.get_int("level", f.level, 8));
    const int n_coarse = int(opt.get_int("n_coarse", f.n_coarse, 2));
    const int fine_offset = int(opt.get_int("fine_offset", f.fine_offset, 6));
    McRun run;
    run.budget = opt.get_u64("budget", f.budget, 100'000);
    run.seed = opt.get_u64("seed", f.seed, 0);
    run.threads = int(opt.get_int("threads", f.threads, 1));
    const double tolerance = opt.get_double("tolerance", f.tolerance, 0.2);

    IltFunctional fn;
    fn.m = 1;
    fn.q = {q};
    fn.stop = StopRule::exit_unit_interval;
    const TailEstimate est = estimate_tail(fn, level, {}, run);

    // Straight-run probability of the coarse embedded walk.
    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<std::uint64_t>(
        RngStream::derive_seed(run.seed, 0x51), 0, sizes.size(), run.threads,
        [&](std::size_t b, RngStream& rng) {
            std::uint64_t hits = 0;
            for (std::uint64_t i = 0; i < sizes[b]; ++i)
                if (simulate_exit_walk(n_coarse, 0, rng).n_steps ==
                    (std::int64_t(1) << n_coarse))
                    ++hits;
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : batches) hits += h;
    const BernoulliEstimate straight = wilson_interval(hits, run.budget);
    const double straight_exact =
        2.0 * std::pow(0.5, std::ldexp(1.0, n_coarse));

    McRun lln_run = run;
    lln_run.budget = std::min<std::uint64_t>(run.budget, 4000);
    lln_run.seed = RngStream::derive_seed(run.seed, 0x11);
    const SelfIltBound bound = self_ilt_strategy_bound(q, n_coarse, fine_offset, lln_run);

    std::ostringstream csv;
    est.write_csv(csv, "m,q_list,stop_rule,level",
                  "1," + format_double(q) + ",exit," + std::to_string(level));
    csv << "# straight_run: n=" << n_coarse
        << " p_hat=" << format_double(straight.p_hat)
        << " exact=" << format_double(straight_exact)
        << " lln_conditional=" << format_double(bound.lln_conditional.p_hat)
        << " c_q=" << format_double(bound.c_q) << "\n";
    csv << csv_footer(opt.canonical(), run.seed);
    write_artifact(f.out, csv.str());

    const bool slope_ok = std::abs(est.fit.slope - est.target_exponent) <= tolerance;
    const bool straight_ok = straight.ci_low <= straight_exact &&
                             straight_exact <= straight.ci_high;
    std::cout << "q=" << format_double(q) << " slope=" << format_double(est.fit.slope)
              << " target=" << format_double(est.target_exponent) << " "
              << pass_fail(slope_ok) << " straight_run=" << format_double(straight.p_hat)
              << " exact=" << format_double(straight_exact) << " "
              << pass_fail(straight_ok) << "\n";
    return 0;
}

int cmd_disjoint(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"m",   "upper", "eps_sites", "level",
                                     "budget", "seed",  "threads",  "out"};
    Options opt(cmd, load_config(f.config, keys));
    const int m = int(opt.get_int("m", f.m, 2));
    const int upper = int(opt.get_int("upper", f.upper, 1));
    const int eps_sites = int(opt.get_int("eps_sites", f.eps_sites, 16));
    const int level = int(opt.get_int("level", f.level, 8));
    McRun run;
    run.budget = opt.get_u64("budget", f.budget, 100'000);
    run.seed = opt.get_u64("seed", f.seed, 0);
    run.threads = int(opt.get_int("threads", f.threads, 1));

    StartConfiguration start;
    start.upper.assign(std::size_t(m), false);
    for (int j = 0; j < upper && j < m; ++j) start.upper[std::size_t(j)] = true;
    start.eps_site_offset = eps_sites;

    const BernoulliEstimate est = disjointness_probe(start, level, run);
    const double eps = double(eps_sites) * std::ldexp(1.0, -level);
    const int l = upper;
    const double predicted = 2.0 * double(l) * double(m - l) * eps * eps;

    std::ostringstream csv;
    csv << "m,l,eps,level,p_hat,ci_low,ci_high,predicted\n";
    csv << m << ',' << l << ',' << format_double(eps) << ',' << level << ','
        << format_double(est.p_hat) << ',' << format_double(est.ci_low) << ','
        << format_double(est.ci_high) << ',' << format_double(predicted) << '\n';
    csv << csv_footer(opt.canonical(), run.seed);
    write_artifact(f.out, csv.str());

    std::cout << "m=" << m << " l=" << l << " eps=" << format_double(eps)
              << " p_hat=" << format_double(est.p_hat)
              << " predicted=" << format_double(predicted)
              << " ratio=" << format_double(est.p_hat / predicted) << "\n";
    return 0;
}

int cmd_scaling_check(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"eta",  "m",      "q",    "level",
                                     "budget", "seed", "threads", "out"};
    Options opt(cmd, load_config(f.config, keys));
    const int eta = int(opt.get_int("eta", f.eta, 2));
    const int m = int(opt.get_int("m", f.m, 2));
    const auto q = parse_double_list(opt.get_string("q", f.q_list, "1,1"));
    const int level = int(opt.get_int("level", f.level, 9));
    McRun run;
    run.budget = opt.get_u64("budget", f.budget, 20'000);
    run.seed = opt.get_u64("seed", f.seed, 0);
    run.threads = int(opt.get_int("threads", f.threads, 1));

    const IltFunctional fn = make_functional(m, q, "exit", 1.0);
    const double ks = scaling_check(fn, eta, level, run);
    const double n = double(run.budget);
    const double threshold = 1.63 * std::sqrt(2.0 / n); // 99% two-sample quantile

    std::ostringstream csv;
    csv << "eta,m,q_list,level,samples_per_side,ks,threshold\n";
    csv << eta << ',' << m << ',' << join_doubles(fn.q, ';') << ',' << level << ','
        << run.budget << ',' << format_double(ks) << ',' << format_double(threshold)
        << '\n';
    csv << csv_footer(opt.canonical(), run.seed);
    write_artifact(f.out, csv.str());

    std::cout << "eta=" << eta << " ks=" << format_double(ks)
              << " threshold=" << format_double(threshold) << " "
              << pass_fail(ks < threshold) << "\n";
    return 0;
}

int cmd_exit_tails(const CLI::App* cmd, const FlagValues& f) {
    const std::set<std::string> keys{"level", "x_scale", "side",  "m",
                                     "a_grid", "budget", "seed",  "threads",
                                     "out"};
    Options opt(cmd, load_config(f.config, keys));
    const int level = int(opt.get_int("level", f.level, 7));
    const double x_scale = opt.get_double("x_scale", f.x_scale, 1.0);
    const std::string side_name = opt.get_string("side", f.side, "min");
    const int m = int(opt.get_int("m", f.m, 1));
    McRun run;
    run.budget = opt.get_u64("budget", f.budget, 20'000);
    run.seed = opt.get_u64("seed", f.seed, 0);
    run.threads = int(opt.get_int("threads", f.threads, 1));

    const ExtremeSide side =
        side_name == "min" ? ExtremeSide::min_side : ExtremeSide::max_side;
    std::vector<double> a_grid = parse_double_list(
        opt.get_string("a_grid", f.a_grid,
                       side == ExtremeSide::min_side ? "0.06,0.08,0.1,0.14,0.2,0.3"
                                                     : "1,1.5,2,3,4,6"));

    std::ostringstream csv;
    csv << "a,p_hat,ci_low,ci_high\n";
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < a_grid.size(); ++i) {
        const auto sizes = batch_sizes(run.budget);
        auto batches = run_work_items<std::pair<std::uint64_t, std::uint64_t>>(
            RngStream::derive_seed(run.seed, i), 0, sizes.size(), run.threads,
            [&](std::size_t b, RngStream& rng) {
                const auto est = exit_time_tail_probe(level, x_scale, a_grid[i],
                                                      sizes[b], side, m, rng);
                return std::make_pair(est.successes, est.trials);
            });
        std::uint64_t hits = 0, trials = 0;
        for (auto [h, t] : batches) {
            hits += h;
            trials += t;
        }
        const BernoulliEstimate est = wilson_interval(hits, trials);
        csv << format_double(a_grid[i]) << ',' << format_double(est.p_hat) << ','
            << format_double(est.ci_low) << ',' << format_double(est.ci_high) << '\n';
        if (est.p_hat > 0.0 && est.p_hat < 1.0) {
            xs.push_back(side == ExtremeSide::min_side ? 1.0 / a_grid[i] : a_grid[i]);
            ys.push_back(std::log(est.p_hat));
        }
    }

    // Bound shape: log p decays linearly in 1/a (min side) or a (max side).
    std::string fit_line = "insufficient points for shape fit";
    if (xs.size() >= 3) {
        std::vector<FitPoint> pts;
        for (std::size_t i = 0; i < xs.size(); ++i)
            pts.push_back({std::exp(xs[i]), std::exp(ys[i])});
        const RegressionFit fit = fit_power_law(pts); // log p against x
        fit_line = "exit_tail_beta=" + format_double(-fit.slope) +
                   " kappa=" + format_double(std::exp(fit.intercept)) +
                   " r_squared=" + format_double(fit.r_squared);
    }
    csv << "# " << fit_line << "\n";
    csv << csv_footer(opt.canonical(), run.seed);
    write_artifact(f.out, csv.str());
    std::cout << "side=" << side_name << " " << fit_line << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"lower-tail experiments for branching and intersection functionals"};
    app.require_subcommand(1);

    FlagValues f;
    CLI::App* params = app.add_subcommand("params", "derived branching parameters");
    CLI::App* prune_cmd = app.add_subcommand("prune", "reduced offspring law");
    CLI::App* gw_density =
        app.add_subcommand("gw-density", "distributional fixed point of W");
    CLI::App* gw_tail = app.add_subcommand("gw-tail", "martingale-limit tail exponent");
    CLI::App* bm_green =
        app.add_subcommand("bm-green", "mean local-time profile at the unit exit");
    CLI::App* ilt_tail =
        app.add_subcommand("ilt-tail", "mutual intersection tail exponent");
    CLI::App* silt_tail =
        app.add_subcommand("silt-tail", "self-intersection tail exponent");
    CLI::App* disjoint = app.add_subcommand("disjoint", "range disjointness probe");
    CLI::App* scaling =
        app.add_subcommand("scaling-check", "exit-scaling distributional identity");
    CLI::App* exit_tails = app.add_subcommand("exit-tails", "exit-time tail probes");

    for (CLI::App* cmd : {params, prune_cmd, gw_density, gw_tail, bm_green, ilt_tail,
                          silt_tail, disjoint, scaling, exit_tails})
        add_common_flags(cmd, f);

    gw_tail->add_option("--method", f.method, "mc | density | conditioned_mc");
    gw_tail->add_option("--iterations", f.iterations, "fixed-point iterations");
    gw_tail->add_option("--depth", f.depth, "MC truncation depth");
    gw_tail->add_option("--tolerance", f.tolerance, "slope tolerance");
    gw_tail->add_option("--eps_min", f.eps_min, "smallest epsilon");
    gw_tail->add_option("--eps_max", f.eps_max, "largest epsilon");
    gw_density->add_option("--iterations", f.iterations, "fixed-point iterations");
    bm_green->add_option("--tolerance", f.tolerance, "sup-error tolerance");
    for (CLI::App* cmd : {ilt_tail, silt_tail, scaling})
        cmd->add_option("--q", f.q_list, "comma separated exponents");
    for (CLI::App* cmd : {ilt_tail, scaling, disjoint})
        cmd->add_option("--m", f.m, "number of motions");
    ilt_tail->add_option("--stop", f.stop, "exit | fixed");
    ilt_tail->add_option("--horizon", f.horizon, "fixed-time horizon");
    ilt_tail->add_option("--tolerance", f.tolerance, "slope tolerance");
    silt_tail->add_option("--n_coarse", f.n_coarse, "coarse straight-run level");
    silt_tail->add_option("--fine_offset", f.fine_offset, "segment refinement");
    silt_tail->add_option("--tolerance", f.tolerance, "slope tolerance");
    disjoint->add_option("--upper", f.upper, "motions exiting at +1");
    disjoint->add_option("--eps_sites", f.eps_sites, "start offset in sites");
    scaling->add_option("--eta", f.eta, "scaling factor (power of two)");
    exit_tails->add_option("--x_scale", f.x_scale, "interval half width");
    exit_tails->add_option("--side", f.side, "min | max");
    exit_tails->add_option("--a_grid", f.a_grid, "comma separated thresholds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (params->parsed()) return cmd_params(params, f);
        if (prune_cmd->parsed()) return cmd_prune(prune_cmd, f);
        if (gw_density->parsed()) return cmd_gw_density(gw_density, f);
        if (gw_tail->parsed()) return cmd_gw_tail(gw_tail, f);
        if (bm_green->parsed()) return cmd_bm_green(bm_green, f);
        if (ilt_tail->parsed()) return cmd_ilt_tail(ilt_tail, f);
        if (silt_tail->parsed()) return cmd_silt_tail(silt_tail, f);
        if (disjoint->parsed()) return cmd_disjoint(disjoint, f);
        if (scaling->parsed()) return cmd_scaling_check(scaling, f);
        if (exit_tails->parsed()) return cmd_exit_tails(exit_tails, f);
    } catch (const ConfigError& e) {
        for (const auto& msg : e.messages) std::cerr << msg << "\n";
        return 2;
    } catch (const DegenerateDistributionError& e) {
        std::cerr << "degenerate distribution: " << e.what() << "\n";
        return 3;
    } catch (const InvalidRegimeError& e) {
        std::cerr << "invalid regime: " << e.what() << "\n";
        return 3;
    } catch (const ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace lowtail::cli
