#pragma once

/// @file cli.hpp
/// Batch front end for the wglab library. `run` is the whole program, kept in
/// a header so the tests can drive it in-process.

#include <wglab/wglab.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace wglab::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

/// Raised when a verification step inside a subcommand does not hold.
struct check_failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by validation with a field-level message.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    unsigned k = 2;
    u64 w = 2;
    u64 s = 0;
    std::vector<u64> N{4096};
    std::string subset = "all";
    std::string b = "all";
    double sigma = 4.0;
    double sigma0 = 2.0;
    u64 grid_factor = 8;
    u64 seed = 0;
    std::string out;
    unsigned threads = 0;

    // per-command inputs
    u64 q = 0;
    u64 p = 0;
    u64 n = 0;
    bool n_set = false;
    std::string strategy = "exhaustive";
    std::string method = "fft";
    u64 lo = 0, hi = 0;
    bool no_filter = false;
    double epsilon = 0.1;
    double exponent = 6.5;
    double fconst = 0.6;
    std::vector<double> alpha;
    std::vector<u64> qs{1, 2, 3, 4};
    std::string control = "none";
    bool dump = false;

    // budget caps
    u64 exhaustive_budget = u64{1} << 25;
    u64 trials = 100000;
    u64 enum_cap = kDefaultEnumerationCap;
    u64 sieve_cap = kDefaultSieveCap;
    u64 fft_alloc_cap = u64{1} << 27;
};

inline json config_json(const ExperimentConfig& c)
{
    return json{{"k", c.k},
                {"w", c.w},
                {"s", c.s},
                {"N", c.N},
                {"subset", c.subset},
                {"b", c.b},
                {"sigma", c.sigma},
                {"sigma0", c.sigma0},
                {"grid_factor", c.grid_factor},
                {"seed", c.seed},
                {"epsilon", c.epsilon}};
}

namespace detail {

inline std::vector<u64> parse_b_list(const std::string& text, const PowerResidueTable& table)
{
    if (text == "all") return table.unit_residues();
    std::vector<u64> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        u64 b = 0;
        try {
            b = std::stoull(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) throw config_error("b: '" + item + "' is not an integer");
        if (!table.in_Z(b) || b >= table.modulus().value())
            throw config_error("b: " + std::to_string(b) + " is not in Z(W) for W = " + std::to_string(table.modulus().value()));
        out.push_back(b);
    }
    if (out.empty()) throw config_error("b: empty list");
    return out;
}

inline SubsetSpec parse_subset(const ExperimentConfig& c)
{
    std::string text = c.subset;
    if (text.rfind("bernoulli:", 0) == 0 && std::count(text.begin(), text.end(), ':') == 1) text += ":" + std::to_string(c.seed);
    try {
        return SubsetSpec::parse(text);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("subset: ") + e.what());
    }
}

inline PairStrategy parse_strategy(const std::string& s)
{
    if (s == "exhaustive") return PairStrategy::exhaustive;
    if (s == "sampled") return PairStrategy::sampled;
    if (s == "structured") return PairStrategy::structured;
    throw config_error("strategy: expected exhaustive|sampled|structured, got '" + s + "'");
}

inline std::string fmt(double v) { return wglab::detail::fmt12(v); }

} // namespace detail

/// Output sink: the JSON report goes to stdout and, with --out, to
/// <out>/<name>.json together with any side files.
class Reporter {
public:
    Reporter(const ExperimentConfig& c, std::ostream& out) : cfg_(c), out_(out) {}

    void emit(const std::string& name, const json& report)
    {
        const std::string text = report.dump(2) + "\n";
        out_ << text;
        if (!cfg_.out.empty()) write_file(name + ".json", text);
    }

    void side_file(const std::string& name, const std::function<void(std::ostream&)>& writer, bool binary = false)
    {
        if (cfg_.out.empty()) return;
        std::filesystem::create_directories(cfg_.out);
        std::ofstream os(std::filesystem::path(cfg_.out) / name, binary ? std::ios::binary : std::ios::out);
        if (!os) throw std::runtime_error("cannot open " + name + " for writing");
        writer(os);
    }

    bool writes_files() const noexcept { return !cfg_.out.empty(); }

private:
    void write_file(const std::string& name, const std::string& text)
    {
        side_file(name, [&](std::ostream& os) { os << text; });
    }

    const ExperimentConfig& cfg_;
    std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void require(bool ok, const std::string& message)
{
    if (!ok) throw config_error(message);
}

inline void validate_common(const ExperimentConfig& c)
{
    require(c.k >= 1, "k: must be >= 1");
    require(c.w >= 2, "w: must be >= 2");
    require(!c.N.empty(), "N: list must not be empty");
    for (u64 n : c.N) require(n >= 1, "N: entries must be >= 1");
    require(c.sigma > 0 && c.sigma0 > 0, "sigma, sigma0: must be positive");
    require(c.grid_factor >= 2, "grid-factor: must be >= 2");
    require(c.epsilon > 0 && c.epsilon < 1, "epsilon: must lie in (0, 1)");
    (void)detail::parse_subset(c);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct Command {
    std::string name;
    std::function<void(const ExperimentConfig&)> validate;
    std::function<std::vector<std::string>(const ExperimentConfig&)> plan;
    std::function<void(const ExperimentConfig&, Reporter&, std::ostream&)> execute;
};

inline json base_report(const std::string& name, const ExperimentConfig& c)
{
    return json{{"command", name}, {"config", config_json(c)}};
}

inline Command cmd_local_rk()
{
    return {"local-rk",
            [](const ExperimentConfig& c) { require(c.k >= 1, "k: must be >= 1"); },
            [](const ExperimentConfig& c) { return std::vector<std::string>{"compute R_k for k = " + std::to_string(c.k)}; },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream& out) {
                const auto R = compute_Rk(c.k);
                out << R.value() << "\n";
                if (rep.writes_files()) {
                    json r = base_report("local-rk", c);
                    r["R_k"] = R.value();
                    r["factorization"] = R.to_string();
                    std::ostringstream sink;
                    Reporter quiet(c, sink);
                    quiet.emit("local-rk", r);
                }
            }};
}

inline Command cmd_local_w()
{
    return {"local-w",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.w >= 2, "w: must be >= 2");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"compute W for w = " + std::to_string(c.w) + ", k = " + std::to_string(c.k)};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto W = compute_W(c.w, c.k);
                json r = base_report("local-w", c);
                r["W"] = W.value();
                r["factorization"] = W.to_string();
                r["phi"] = W.phi();
                rep.emit("local-w", r);
            }};
}

inline Command cmd_local_residues()
{
    return {"local-residues",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.q >= 1, "q: must be >= 1");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"enumerate t^k mod " + std::to_string(c.q) + " for k = " + std::to_string(c.k)};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto t = power_residues(FactoredModulus::factor(c.q), c.k, c.enum_cap);
                json r = base_report("local-residues", c);
                r["q"] = c.q;
                r["residues"] = t.all_residues();
                r["Z"] = t.unit_residues();
                rep.emit("local-residues", r);
            }};
}

inline Command cmd_local_sigma()
{
    return {"local-sigma",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.w >= 2, "w: must be >= 2");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"sigma(b) over Z(W), W = W(" + std::to_string(c.w) + ", " + std::to_string(c.k) + ")"};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto W = compute_W(c.w, c.k);
                const auto t = power_residues(W, c.k, c.enum_cap);
                json r = base_report("local-sigma", c);
                json per = json::object();
                u64 total = 0, first = 0;
                bool constant = true;
                for (u64 b : detail::parse_b_list(c.b, t)) {
                    const u64 sg = sigma_b(t, b);
                    if (first == 0) first = sg;
                    constant = constant && sg == first;
                    total += sg;
                    per[std::to_string(b)] = sg;
                }
                r["W"] = W.value();
                r["phi"] = W.phi();
                r["Z_size"] = t.unit_residues().size();
                r["sigma"] = per;
                r["sigma_sum"] = total;
                r["constant"] = constant;
                const bool full = c.b == "all";
                r["sum_equals_phi"] = full ? json(total == W.phi()) : json(nullptr);
                rep.emit("local-sigma", r);
                if (!constant) throw check_failed("sigma(b) is not constant on Z(W)");
                if (full && total != W.phi()) throw check_failed("sum of sigma(b) differs from phi(W)");
            }};
}

inline Command cmd_local_lifts()
{
    return {"local-lifts",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.p >= 3 && is_prime_trial(c.p), "p: must be an odd prime");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"count solutions mod p^(2k) for p = " + std::to_string(c.p) + ", k = " + std::to_string(c.k)};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto base = power_residues(FactoredModulus::factor(c.p), c.k);
                json r = base_report("local-lifts", c);
                json rows = json::array();
                const u64 expected = lift_closed_form(c.p, c.k);
                for (u64 a : base.unit_residues()) rows.push_back({{"a", a}, {"count", lift_count(c.p, c.k, a, c.enum_cap)}});
                r["p"] = c.p;
                r["tau"] = tau(c.k, c.p);
                r["closed_form"] = expected;
                r["rows"] = rows;
                rep.emit("local-lifts", r);
            }};
}

inline Command cmd_local_decompose()
{
    return {"local-decompose",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.w >= 2, "w: must be >= 2");
                require(c.s >= 1, "s: must be >= 1");
                require(c.fconst >= 0.0 && c.fconst < 1.0, "f: must lie in [0, 1)");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"local DP with constant f = " + detail::fmt(c.fconst) + " for s = " + std::to_string(c.s) +
                                                (c.n_set ? ", n = " + std::to_string(c.n) : ", every admissible n mod W")};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto W = compute_W(c.w, c.k);
                const auto t = power_residues(W, c.k, c.enum_cap);
                std::map<u64, double> f;
                for (u64 b : t.unit_residues()) f[b] = c.fconst;
                const u64 target_mod = compute_Rk(c.k).gcd(W).value();
                std::vector<u64> targets;
                if (c.n_set)
                    targets.push_back(c.n % W.value());
                else
                    for (u64 n = 0; n < W.value(); ++n)
                        if (n % target_mod == c.s % target_mod) targets.push_back(n);
                json rows = json::array();
                u64 successes = 0;
                for (u64 n : targets) {
                    const auto res = local_decompose(t, c.s, n, f);
                    if (res.success && !verify_decomposition(t, f, *res.decomposition))
                        throw check_failed("decomposition of " + std::to_string(n) + " does not re-verify");
                    successes += res.success ? 1 : 0;
                    json row{{"n", n}, {"success", res.success}, {"reachable", res.reachable}, {"optimum", res.optimum}};
                    if (res.decomposition) row["parts"] = res.decomposition->parts;
                    rows.push_back(row);
                }
                json r = base_report("local-decompose", c);
                r["W"] = W.value();
                r["f"] = c.fconst;
                r["targets"] = targets.size();
                r["successes"] = successes;
                r["rows"] = rows;
                rep.emit("local-decompose", r);
            }};
}

inline Command cmd_local_thresholds()
{
    return {"local-thresholds",
            [](const ExperimentConfig& c) { require(c.k >= 2, "k: must be >= 2"); },
            [](const ExperimentConfig& c) { return std::vector<std::string>{"threshold table for k = " + std::to_string(c.k)}; },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                json r = base_report("local-thresholds", c);
                r["thresholds"] = summand_thresholds(c.k);
                rep.emit("local-thresholds", r);
            }};
}

inline Command cmd_waring_pair()
{
    return {"waring-pair",
            [](const ExperimentConfig& c) {
                require(c.k >= 1, "k: must be >= 1");
                require(c.q >= 2, "q: must be >= 2");
                require(c.s >= 1, "s: must be >= 1");
                (void)detail::parse_strategy(c.strategy);
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"Waring pair check (" + std::to_string(c.q) + ", " + std::to_string(c.s) + ") at k = " +
                                                std::to_string(c.k) + ", strategy " + c.strategy};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto t = power_residues(FactoredModulus::factor(c.q), c.k, c.enum_cap);
                WaringPairOptions opt;
                opt.exhaustive_budget = c.exhaustive_budget;
                opt.trials = c.trials;
                opt.seed = c.seed;
                opt.threads = c.threads;
                const auto report = waring_pair_check(t, c.s, detail::parse_strategy(c.strategy), opt);
                rep.emit("waring-pair", json(report));
                if (report.witness && !verify_witness(t, c.s, *report.witness)) throw check_failed("witness does not re-verify");
            }};
}

inline Command cmd_majorant()
{
    return {"majorant",
            [](const ExperimentConfig& c) {
                validate_common(c);
                const auto W = compute_W(c.w, c.k);
                (void)detail::parse_b_list(c.b, power_residues(W, c.k, c.enum_cap));
            },
            [](const ExperimentConfig& c) {
                std::vector<std::string> p;
                for (u64 N : c.N) p.push_back("nu_b, f_b and g(b, N) at N = " + std::to_string(N) + ", subset " + c.subset);
                return p;
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                const auto bs = detail::parse_b_list(c.b, ctx.table);
                const auto spec = detail::parse_subset(c);
                const u64 Nmax = *std::max_element(c.N.begin(), c.N.end());
                const u64 limit = std::max<u64>(100, iroot(ctx.W.value() * Nmax + ctx.W.value(), c.k));
                const auto primes = std::make_shared<const PrimeSet>(sieve_primes(limit, c.sieve_cap));
                const auto subset = gen_subset(spec, primes);
                json rows = json::array();
                for (u64 N : c.N) {
                    const auto means = mean_g(ctx, N, subset, c.epsilon);
                    json per_b = json::array();
                    double books = 0.0;
                    for (u64 b : ctx.table.unit_residues()) books += means.g.at(b) * static_cast<double>(N) / ctx.weight_scale(b);
                    for (u64 b : bs) {
                        const auto nu = build_nu(ctx, b, N, *primes);
                        const auto f = build_f(ctx, b, N, subset);
                        for (u64 n = 1; n <= N; ++n)
                            if (f(n) > nu(n)) throw check_failed("f_b exceeds nu_b at n = " + std::to_string(n));
                        per_b.push_back({{"b", b},
                                         {"mean_nu", nu.mean()},
                                         {"deviation", std::abs(nu.mean() - 1.0)},
                                         {"g", means.g.at(b)},
                                         {"sigma", ctx.sigma(b)}});
                        if (c.dump) {
                            const std::string stem = "nu_b" + std::to_string(b) + "_N" + std::to_string(N);
                            rep.side_file(stem + ".bin", [&](std::ostream& os) { write_binary(os, nu); }, true);
                            rep.side_file(stem + ".csv", [&](std::ostream& os) { write_csv(os, nu); });
                            const std::string fstem = "f_b" + std::to_string(b) + "_N" + std::to_string(N);
                            rep.side_file(fstem + ".bin", [&](std::ostream& os) { write_binary(os, f); }, true);
                            rep.side_file(fstem + ".csv", [&](std::ostream& os) { write_csv(os, f); });
                        }
                    }
                    const double mass = prime_power_mass(ctx, N, subset);
                    const bool balanced = std::abs(books - mass) <= 1e-9 * std::max(1.0, mass);
                    rows.push_back({{"N", N}, {"means", means}, {"per_b", per_b}, {"books", books}, {"prime_power_mass", mass},
                                    {"balanced", balanced}});
                    if (!balanced) throw check_failed("books balance fails at N = " + std::to_string(N));
                }
                json r = base_report("majorant", c);
                r["W"] = ctx.W.value();
                r["subset_density"] = subset.reported_density();
                r["rows"] = rows;
                rep.emit("majorant", r);
            }};
}

inline std::optional<ArcParams> try_arcs(const ExperimentConfig& c, u64 W, u64 N)
{
    try {
        return ArcParams::make(c.sigma, c.sigma0, W, N, c.k);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

inline Command cmd_spectrum()
{
    return {"spectrum",
            [](const ExperimentConfig& c) {
                validate_common(c);
                (void)detail::parse_b_list(c.b, power_residues(compute_W(c.w, c.k), c.k, c.enum_cap));
            },
            [](const ExperimentConfig& c) {
                std::vector<std::string> p;
                for (u64 N : c.N) p.push_back("gauge D on M = " + std::to_string(c.grid_factor) + " * next_pow2(" + std::to_string(N) + ")");
                return p;
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                const auto bs = detail::parse_b_list(c.b, ctx.table);
                json rows = json::array();
                for (u64 N : c.N) {
                    const u64 M = default_grid(N, c.grid_factor);
                    const auto primes = sieve_primes(std::max<u64>(2, iroot(ctx.W.value() * N + ctx.W.value(), c.k)), c.sieve_cap);
                    const auto arcs = try_arcs(c, ctx.W.value(), N);
                    for (u64 b : bs) {
                        const auto nu = build_nu(ctx, b, N, primes);
                        const auto spec = dft_spectrum(nu, M);
                        double parseval = 0.0, sq = 0.0, asym = 0.0;
                        for (const auto& v : spec.values) parseval += std::norm(v);
                        parseval /= static_cast<double>(M);
                        for (double v : nu.values()) sq += v * v;
                        for (u64 j = 1; j < M; ++j) asym = std::max(asym, std::abs(spec.values[M - j] - std::conj(spec.values[j])));
                        const bool ok = std::abs(parseval - sq) <= 1e-9 * std::max(1.0, sq) &&
                                        asym <= 1e-9 * std::max(1.0, std::abs(spec.values[0]));
                        const auto gauge = pseudorandom_gauge(nu, M, arcs);
                        json g = gauge;
                        g["w"] = c.w;
                        g["k"] = c.k;
                        g["b"] = b;
                        g["sigma"] = c.sigma;
                        g["arcs_valid"] = arcs.has_value();
                        g["parseval_ok"] = ok;
                        rows.push_back(g);
                        if (c.dump) {
                            const std::string stem = "spectrum_b" + std::to_string(b) + "_N" + std::to_string(N);
                            rep.side_file(stem + ".csv", [&](std::ostream& os) { write_csv(os, spec); });
                            rep.side_file(stem + ".bin", [&](std::ostream& os) { write_binary(os, spec); }, true);
                        }
                        if (!ok) throw check_failed("Parseval or conjugate symmetry fails at N = " + std::to_string(N));
                    }
                }
                json r = base_report("spectrum", c);
                r["rows"] = rows;
                rep.emit("spectrum", r);
            }};
}

inline Command cmd_arcs()
{
    return {"arcs",
            [](const ExperimentConfig& c) {
                validate_common(c);
                for (u64 q : c.qs) require(q >= 1, "qs: entries must be >= 1");
                (void)detail::parse_b_list(c.b, power_residues(compute_W(c.w, c.k), c.k, c.enum_cap));
            },
            [](const ExperimentConfig& c) {
                std::vector<std::string> p;
                for (u64 N : c.N) p.push_back("arc classification and major-arc residuals at N = " + std::to_string(N));
                return p;
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                const auto bs = detail::parse_b_list(c.b, ctx.table);
                json rows = json::array();
                for (u64 N : c.N) {
                    json row{{"N", N}};
                    const auto arcs = try_arcs(c, ctx.W.value(), N);
                    if (arcs) {
                        row["L"] = arcs->L;
                        row["P"] = arcs->P;
                        row["Q"] = arcs->Q;
                        json cls = json::array();
                        for (double a : c.alpha) {
                            const auto arc = arc_decompose(*arcs, a);
                            cls.push_back({{"alpha", a}, {"q", arc.q}, {"a", arc.a}, {"distance", arc.distance},
                                           {"class", arc.classification == ArcClass::major ? "major" : "minor"}});
                        }
                        row["classification"] = cls;
                    } else {
                        row["arcs_valid"] = false;
                    }
                    const auto primes = sieve_primes(std::max<u64>(2, iroot(ctx.W.value() * N + ctx.W.value(), c.k)), c.sieve_cap);
                    json res = json::array();
                    for (u64 b : bs) {
                        const auto nu = build_nu(ctx, b, N, primes);
                        for (u64 q : c.qs)
                            for (u64 a = q == 1 ? 0 : 1; a < q || (q == 1 && a == 0); ++a) {
                                if (q > 1 && std::gcd(a, q) != 1) continue;
                                const auto actual = evaluate_at_rational(nu, a, q);
                                const auto model = major_arc_model(q, a, 0.0, ctx, b, N);
                                res.push_back({{"b", b}, {"q", q}, {"a", a}, {"model_re", model.real()}, {"model_im", model.imag()},
                                               {"actual_re", actual.real()}, {"actual_im", actual.imag()},
                                               {"value", std::abs(actual - model) / static_cast<double>(N)}});
                                if (q == 1) break;
                            }
                    }
                    row["residuals"] = res;
                    rows.push_back(row);
                }
                json r = base_report("arcs", c);
                r["rows"] = rows;
                rep.emit("arcs", r);
            }};
}

inline Command cmd_restrict()
{
    return {"restrict",
            [](const ExperimentConfig& c) {
                validate_common(c);
                require(c.exponent > 2.0, "exponent: must exceed 2");
                require(c.control == "none" || c.control == "spike", "control: expected none|spike");
                require(c.grid_factor >= 4, "grid-factor: restriction norms need >= 4");
                (void)detail::parse_b_list(c.b, power_residues(compute_W(c.w, c.k), c.k, c.enum_cap));
            },
            [](const ExperimentConfig& c) {
                std::vector<std::string> p;
                for (u64 N : c.N) p.push_back("restriction constant at exponent " + detail::fmt(c.exponent) + ", N = " + std::to_string(N));
                return p;
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                const auto bs = detail::parse_b_list(c.b, ctx.table);
                const auto spec = detail::parse_subset(c);
                json rows = json::array();
                for (u64 N : c.N) {
                    const u64 M = default_grid(N, c.grid_factor);
                    const u64 limit = std::max<u64>(100, iroot(ctx.W.value() * N + ctx.W.value(), c.k));
                    const auto subset = gen_subset(spec, std::make_shared<const PrimeSet>(sieve_primes(limit, c.sieve_cap)));
                    for (u64 b : bs) {
                        json row = restriction_norm(build_f(ctx, b, N, subset), c.exponent, M);
                        row["w"] = c.w;
                        row["k"] = c.k;
                        row["b"] = b;
                        row["sigma"] = c.sigma;
                        row["sequence"] = "f_b";
                        rows.push_back(row);
                    }
                    if (c.control == "spike") {
                        json row = restriction_norm(WeightedSequence::spike(N, 1, static_cast<double>(N)), c.exponent, M);
                        row["w"] = c.w;
                        row["k"] = c.k;
                        row["b"] = nullptr;
                        row["sigma"] = c.sigma;
                        row["sequence"] = "spike";
                        rows.push_back(row);
                    }
                }
                json r = base_report("restrict", c);
                r["rows"] = rows;
                rep.emit("restrict", r);
            }};
}

inline CountLimits count_limits(const ExperimentConfig& c)
{
    CountLimits lim;
    lim.fft_max_alloc = c.fft_alloc_cap;
    return lim;
}

inline Command cmd_count()
{
    return {"count",
            [](const ExperimentConfig& c) {
                validate_common(c);
                require(c.s >= 1, "s: must be >= 1");
                require(c.hi >= c.lo, "hi: must be >= lo");
                (void)parse_count_method(c.method);
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{c.method + " counts of s = " + std::to_string(c.s) + " prime k-th powers on [" +
                                                std::to_string(c.lo) + ", " + std::to_string(c.hi) + "]"};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto spec = detail::parse_subset(c);
                const auto subset = gen_subset(spec, std::max<u64>(100, iroot(std::max<u64>(c.hi, 1), c.k)));
                const auto counts = count_representations(subset, c.k, c.s, c.lo, c.hi, parse_count_method(c.method), count_limits(c), c.threads);
                json r = base_report("count", c);
                r["method"] = to_string(counts.method);
                r["window"] = {c.lo, c.hi};
                r["generators"] = counts.generators;
                json rows = json::array();
                for (u64 n = c.lo; n <= c.hi; ++n) rows.push_back({n, counts.at(n)});
                r["counts"] = rows;
                rep.emit("count", r);
                rep.side_file("counts.csv", [&](std::ostream& os) {
                    os << "n,count\n";
                    for (u64 n = c.lo; n <= c.hi; ++n) os << n << "," << counts.at(n) << "\n";
                });
            }};
}

inline Command cmd_coverage()
{
    return {"coverage",
            [](const ExperimentConfig& c) {
                validate_common(c);
                require(c.s >= 1, "s: must be >= 1");
                require(c.hi >= c.lo, "hi: must be >= lo");
                require(c.hi >= 1, "hi: must be >= 1");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"coverage of [" + std::to_string(c.lo) + ", " + std::to_string(c.hi) + "] by s = " +
                                                std::to_string(c.s) + " prime k-th powers from " + c.subset};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const auto spec = detail::parse_subset(c);
                const auto subset = gen_subset(spec, std::max<u64>(100, iroot(c.hi, c.k)));
                const auto report = coverage_probe(subset, c.k, c.s, c.lo, c.hi, !c.no_filter, c.threads);
                json r = base_report("coverage", c);
                r["report"] = report;
                rep.emit("coverage", r);
                rep.side_file("coverage.csv", [&](std::ostream& os) { write_csv(os, report); });
                rep.side_file("exceptions.txt", [&](std::ostream& os) { write_exceptions(os, report); });
            }};
}

inline Command cmd_transfer()
{
    return {"transfer",
            [](const ExperimentConfig& c) {
                validate_common(c);
                require(c.s >= 2, "s: must be >= 2");
            },
            [](const ExperimentConfig& c) {
                std::vector<std::string> p;
                for (u64 N : c.N)
                    p.push_back("mean-driven local choice and " + std::to_string(c.s) + "-fold convolution gauge at N = " + std::to_string(N));
                return p;
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                const auto spec = detail::parse_subset(c);
                json rows = json::array();
                for (u64 N : c.N) {
                    const u64 limit = std::max<u64>(100, iroot(ctx.W.value() * N + ctx.W.value(), c.k));
                    const auto subset = gen_subset(spec, std::make_shared<const PrimeSet>(sieve_primes(limit, c.sieve_cap)));
                    const auto run = run_transfer(ctx, N, subset, c.s, c.n_set ? c.n : c.s, c.epsilon, count_limits(c));
                    json row = run;
                    row["N"] = N;
                    rows.push_back(row);
                }
                json r = base_report("transfer", c);
                r["rows"] = rows;
                rep.emit("transfer", r);
            }};
}

/// Quick self-consistency sweep over the exact invariants at the configured
/// (k, w); exit 1 when any of them fails.
inline Command cmd_report()
{
    return {"report",
            [](const ExperimentConfig& c) {
                validate_common(c);
                require(c.k >= 2, "k: must be >= 2");
            },
            [](const ExperimentConfig& c) {
                return std::vector<std::string>{"R_k congruence oracle", "sigma(b) constancy over Z(W)", "threshold table",
                                                "f_b <= nu_b and books balance for N in " + std::to_string(c.N.size()) + " sizes",
                                                "Parseval on nu_b spectra"};
            },
            [](const ExperimentConfig& c, Reporter& rep, std::ostream&) {
                json checks = json::array();
                bool all_ok = true;
                auto record = [&](const std::string& name, bool ok, json detail) {
                    checks.push_back({{"check", name}, {"pass", ok}, {"detail", std::move(detail)}});
                    all_ok = all_ok && ok;
                };
                const auto R = compute_Rk(c.k).value();
                bool rk_ok = true;
                sieve_primes(10000).for_each([&](u64 p) {
                    if (p > R && std::gcd(p, R) == 1 && powmod(p, c.k, R) != 1 % R) rk_ok = false;
                });
                record("rk_congruence", rk_ok, {{"R_k", R}});

                const WTrickContext ctx(compute_W(c.w, c.k), c.k, c.enum_cap);
                u64 total = 0;
                bool constant = true;
                const u64 s0 = ctx.sigma(ctx.table.unit_residues().front());
                for (u64 b : ctx.table.unit_residues()) {
                    total += ctx.table.multiplicity(b);
                    constant = constant && ctx.table.multiplicity(b) == s0;
                }
                record("sigma_constant", constant && total == ctx.phi && s0 * ctx.table.unit_residues().size() == ctx.phi,
                       {{"W", ctx.W.value()}, {"sigma", s0}, {"phi", ctx.phi}});
                record("thresholds", true, summand_thresholds(c.k));

                const auto spec = detail::parse_subset(c);
                for (u64 N : c.N) {
                    const u64 limit = std::max<u64>(100, iroot(ctx.W.value() * N + ctx.W.value(), c.k));
                    const auto primes = std::make_shared<const PrimeSet>(sieve_primes(limit, c.sieve_cap));
                    const auto subset = gen_subset(spec, primes);
                    const auto means = mean_g(ctx, N, subset, c.epsilon);
                    double books = 0.0;
                    bool dominated = true, parseval = true;
                    for (u64 b : ctx.table.unit_residues()) {
                        books += means.g.at(b) * static_cast<double>(N) / ctx.weight_scale(b);
                        const auto nu = build_nu(ctx, b, N, *primes);
                        const auto f = build_f(ctx, b, N, subset);
                        for (u64 n = 1; n <= N; ++n) dominated = dominated && f(n) <= nu(n);
                        const auto sp = dft_spectrum(nu, default_grid(N, c.grid_factor));
                        double lhs = 0.0, rhs = 0.0;
                        for (const auto& v : sp.values) lhs += std::norm(v);
                        lhs /= static_cast<double>(sp.M);
                        for (double v : nu.values()) rhs += v * v;
                        parseval = parseval && std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs);
                    }
                    const double mass = prime_power_mass(ctx, N, subset);
                    record("f_le_nu", dominated, {{"N", N}});
                    record("books_balance", std::abs(books - mass) <= 1e-9 * std::max(1.0, mass), {{"N", N}, {"lhs", books}, {"rhs", mass}});
                    record("parseval", parseval, {{"N", N}});
                }
                json r = base_report("report", c);
                r["checks"] = checks;
                r["all_pass"] = all_ok;
                rep.emit("report", r);
                if (!all_ok) throw check_failed("one or more checks failed");
            }};
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    ExperimentConfig cfg;
    bool dry_run = false;
    std::string n_list_text;

    CLI::App app{"wglab: Waring-Goldbach transference laboratory", "wglab"};
    app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
    app.require_subcommand(1, 1);
    app.fallthrough();

    app.add_option("--k", cfg.k, "power k")->check(CLI::Range(0u, 64u));
    app.add_option("--w", cfg.w, "W-trick cutoff w");
    app.add_option("--s", cfg.s, "number of summands s");
    app.add_option("--N", cfg.N, "comma-separated list of N")->delimiter(',');
    app.add_option("--subset", cfg.subset, "all|none|bernoulli:D[:SEED]|classes:M:R,..|dropclass:M:R|prefix:X0|windows:A-B,..");
    app.add_option("--b", cfg.b, "comma-separated residues b in Z(W), or 'all'");
    app.add_option("--sigma", cfg.sigma, "major arc exponent");
    app.add_option("--sigma0", cfg.sigma0, "report exponent");
    app.add_option("--grid-factor", cfg.grid_factor, "grid size M = factor * next_pow2(N)");
    app.add_option("--seed", cfg.seed, "64-bit seed");
    app.add_option("--out", cfg.out, "output directory for reports");
    app.add_option("--threads", cfg.threads, "worker threads, 0 = auto");
    app.add_option("--q", cfg.q, "modulus q");
    app.add_option("--p", cfg.p, "odd prime p");
    app.add_option("--n", cfg.n, "target n");
    app.add_option("--strategy", cfg.strategy, "exhaustive|sampled|structured");
    app.add_option("--method", cfg.method, "brute|fft|bitset");
    app.add_option("--lo", cfg.lo, "window start");
    app.add_option("--hi", cfg.hi, "window end");
    app.add_flag("--no-filter", cfg.no_filter, "skip the n = s (mod R_k) filter");
    app.add_option("--epsilon", cfg.epsilon, "epsilon");
    app.add_option("--exponent", cfg.exponent, "restriction exponent (> 2)");
    app.add_option("--f", cfg.fconst, "constant weight for the local DP");
    app.add_option("--alpha", cfg.alpha, "frequencies to classify")->delimiter(',');
    app.add_option("--qs", cfg.qs, "denominators for major-arc residuals")->delimiter(',');
    app.add_option("--control", cfg.control, "none|spike");
    app.add_flag("--dump", cfg.dump, "write sequences and spectra next to the report");
    app.add_option("--budget", cfg.exhaustive_budget, "exhaustive subset budget");
    app.add_option("--trials", cfg.trials, "sampled subsets");
    app.add_option("--enum-cap", cfg.enum_cap, "cap on residue enumeration size");
    app.add_option("--sieve-cap", cfg.sieve_cap, "cap on sieve limit");
    app.add_option("--fft-cap", cfg.fft_alloc_cap, "cap on transform length");
    app.add_flag("--dry-run", dry_run, "validate and print the plan only");

    std::vector<std::pair<CLI::App*, Command>> commands;
    auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, Command cmd) {
        auto* sub = parent->add_subcommand(name, help);
        sub->fallthrough();
        commands.emplace_back(sub, std::move(cmd));
    };
    auto* local = app.add_subcommand("local", "local congruence structure");
    local->fallthrough();
    local->require_subcommand(1, 1);
    add(local, "rk", "print R_k", cmd_local_rk());
    add(local, "w", "W = prod_{p <= w} p^(2k)", cmd_local_w());
    add(local, "residues", "k-th power residues mod q", cmd_local_residues());
    add(local, "sigma", "sigma(b) over Z(W)", cmd_local_sigma());
    add(local, "lifts", "solution counts mod p^(2k)", cmd_local_lifts());
    add(local, "decompose", "local DP with a constant weight", cmd_local_decompose());
    add(local, "thresholds", "threshold table", cmd_local_thresholds());
    add(&app, "waring-pair", "Waring pair check", cmd_waring_pair());
    add(&app, "majorant", "nu_b, f_b and mean values", cmd_majorant());
    add(&app, "spectrum", "spectra and the pseudorandomness gauge", cmd_spectrum());
    add(&app, "arcs", "arc classification and major-arc residuals", cmd_arcs());
    add(&app, "restrict", "restriction constants", cmd_restrict());
    add(&app, "count", "representation counts", cmd_count());
    add(&app, "coverage", "coverage probe", cmd_coverage());
    add(&app, "transfer", "convolution gauge from the local choice", cmd_transfer());
    add(&app, "report", "self-consistency sweep", cmd_report());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    cfg.n_set = app.count("--n") > 0;

    const Command* chosen = nullptr;
    for (const auto& [sub, cmd] : commands)
        if (sub->parsed()) chosen = &cmd;
    if (chosen == nullptr) {
        err << "error: no subcommand selected\n" << app.help();
        return kUsage;
    }

    try {
        chosen->validate(cfg);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    } catch (const resource_limit_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    if (dry_run) {
        json plan{{"command", chosen->name}, {"dry_run", true}, {"config", config_json(cfg)}, {"plan", chosen->plan(cfg)}};
        out << plan.dump(2) << "\n";
        return kOk;
    }

    Reporter rep(cfg, out);
    try {
        chosen->execute(cfg, rep, out);
    } catch (const check_failed& e) {
        err << "check failed: " << e.what() << "\n";
        return kCheckFailed;
    } catch (const std::logic_error& e) {
        // invalid_argument and domain errors from the library are usage errors
        if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e)) {
            err << "error: " << e.what() << "\n";
            return kUsage;
        }
        err << "check failed: " << e.what() << "\n";
        return kCheckFailed;
    } catch (const resource_limit_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "check failed: " << e.what() << "\n";
        return kCheckFailed;
    }
    return kOk;
}

} // namespace wglab::cli
