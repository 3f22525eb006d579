#include "fthresh/binned.hpp"
#include "fthresh/errors.hpp"
#include "fthresh/experiments.hpp"
#include "fthresh/full_cov.hpp"
#include "fthresh/io.hpp"
#include "fthresh/parallel.hpp"
#include "fthresh/simgen.hpp"
#include "fthresh/smooth.hpp"
#include "fthresh/tuning.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace fthresh;
using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInputError = 2,
    kShapeError = 3,
    kDegenerateVariance = 4,
    kConfigError = 5,
};

// Key-value files go through the TOML reader; a JSON object (such as a run
// manifest) contributes its "global" entries to the top level and its
// "options" entries to the subcommand named by "command".
class ManifestConfig : public CLI::ConfigTOML {
  public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::stringstream buffer;
        buffer << input.rdbuf();
        const std::string text = buffer.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream again(text);
            return CLI::ConfigTOML::from_config(again);
        }
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        auto add = [&](const json& obj, const std::vector<std::string>& parents) {
            for (const auto& [key, value] : obj.items()) {
                if (value.is_null() || (value.is_array() && value.empty())) {
                    continue;
                }
                CLI::ConfigItem item;
                item.parents = parents;
                item.name = key;
                if (value.is_array()) {
                    for (const auto& v : value) {
                        item.inputs.push_back(scalar_text(v));
                    }
                } else {
                    item.inputs.push_back(scalar_text(value));
                }
                items.push_back(std::move(item));
            }
        };
        if (doc.contains("global") && doc["global"].is_object()) {
            add(doc["global"], {});
        }
        if (doc.contains("options") && doc["options"].is_object()) {
            add(doc["options"], {doc.value("command", std::string())});
        }
        return items;
    }

  private:
    static std::string scalar_text(const json& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_number_float()) {
            return io::format_double(v.get<double>());
        }
        return v.dump();
    }
};

struct GlobalOptions {
    int threads = 0;
    std::uint64_t seed = 1;
    bool seed_given = false;
};

json global_json(const GlobalOptions& g) { return {{"threads", g.threads}, {"seed", g.seed}}; }

void write_manifest(const fs::path& dir, const std::string& command, const GlobalOptions& g, const json& options,
                    const json& outputs) {
    json manifest = {{"tool", "fthresh"},
                     {"manifest_version", 1},
                     {"command", command},
                     {"global", global_json(g)},
                     {"options", options},
                     {"outputs", outputs}};
    io::write_json(dir / "manifest.json", manifest);
}

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

// ---------------------------------------------------------------- inputs

struct InputOptions {
    std::string input;
    std::string input_kind = "auto";
    std::size_t R = 21;
    std::string smoother = "binned";
    std::string design = "auto";
    double bandwidth_c = 0.0;
    double h_cross = 0.0;
    double h_marginal = 0.0;
    std::vector<std::string> pair_bandwidths;
    std::string kernel = "gaussian";
    bool center = true;

    void add_to(CLI::App& app) {
        app.add_option("--input,-i", input, "Data file: dense CSV/binary or partial CSV")->required();
        app.add_option("--input-kind", input_kind, "auto, dense or partial")
            ->check(CLI::IsMember({"auto", "dense", "partial"}));
        app.add_option("--R", R, "Output grid points for partial data")->check(CLI::Range(2, 100000));
        app.add_option("--smoother", smoother, "binned or direct (partial data)")
            ->check(CLI::IsMember({"binned", "direct"}));
        app.add_option("--design", design, "auto, sparse, dense or very-dense (bandwidth rate)")
            ->check(CLI::IsMember({"auto", "sparse", "dense", "very-dense"}));
        app.add_option("--bandwidth-c", bandwidth_c, "Bandwidth constant c in (0, 1]; 0 picks the design default");
        app.add_option("--h-cross", h_cross, "Cross-covariance bandwidth; overrides the default rule");
        app.add_option("--h-marginal", h_marginal, "Marginal bandwidth; overrides the default rule");
        app.add_option("--pair-bandwidth", pair_bandwidths, "Per-pair bandwidth override 'j,k,h' (repeatable)");
        app.add_option("--kernel", kernel, "gaussian or epanechnikov");
        app.add_flag("--center,!--no-center", center, "Subtract a smoothed mean from partial data");
    }

    json to_json() const {
        return {{"input", input},         {"input-kind", input_kind}, {"R", R},
                {"smoother", smoother},   {"design", design},         {"bandwidth-c", bandwidth_c},
                {"h-cross", h_cross},     {"h-marginal", h_marginal}, {"pair-bandwidth", pair_bandwidths},
                {"kernel", kernel},       {"center", center}};
    }
};

std::string detect_kind(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open for reading: " + path);
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.front() == '{') {
        return "dense";
    }
    if (line.find("grid_index") != std::string::npos) {
        return "dense";
    }
    if (line.find("location") != std::string::npos) {
        return "partial";
    }
    throw ConfigError("cannot tell dense from partial input without a header; pass --input-kind");
}

DenseSample load_dense(const std::string& path) {
    std::ifstream in(path);
    if (in && in.peek() == '{') {
        return io::read_dense_binary(path);
    }
    return io::read_dense_csv(path);
}

// Loaded data and the plain (unthresholded) covariance machinery for it.
struct Pipeline {
    std::unique_ptr<CovarianceFitter> fitter;
    std::optional<PartialSample> partial;
    std::optional<BinnedData> binned;
    std::optional<SmoothingOptions> smoothing;
    GridPtr out_grid;
    std::string route = "sample";

    /// Full-sample fit, with diagnostics for smoothed data.
    std::pair<CovarianceFit, json> fit_all(bool with_variance) const {
        if (!smoothing) {
            return {fitter->fit_all(with_variance), json{{"route", route}}};
        }
        SmoothingOptions opt = *smoothing;
        opt.with_variance = with_variance;
        SmoothedCovariance s = binned ? binned_smooth_covariance(*binned, opt) : smooth_covariance(*partial, out_grid, opt);
        json diag = io::diagnostics_json(s);
        diag["route"] = route;
        return {CovarianceFit{std::move(s.sigma), std::move(s.psi)}, diag};
    }
};

std::map<std::pair<std::size_t, std::size_t>, double> parse_pair_bandwidths(const std::vector<std::string>& specs,
                                                                            std::size_t p) {
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (const auto& s : specs) {
        std::size_t j = 0, k = 0;
        double h = 0.0;
        char tail = 0;
        if (std::sscanf(s.c_str(), "%zu,%zu,%lf%c", &j, &k, &h, &tail) != 3) {
            throw ConfigError("pair bandwidth must look like 'j,k,h': " + s);
        }
        if (j >= p || k >= p || !(h > 0.0)) {
            throw ConfigError("pair bandwidth out of range: " + s);
        }
        out[{std::min(j, k), std::max(j, k)}] = h;
    }
    return out;
}

Pipeline build_pipeline(const InputOptions& in, int threads) {
    Pipeline pipe;
    const std::string kind = in.input_kind == "auto" ? detect_kind(in.input) : in.input_kind;
    if (kind == "dense") {
        DenseSample data = load_dense(in.input);
        pipe.out_grid = data.grid();
        pipe.fitter = std::make_unique<DenseFitter>(std::move(data));
        return pipe;
    }

    PartialSample data = io::read_partial_csv(in.input);
    pipe.out_grid = make_uniform_grid(in.R);
    double mean_L = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        mean_L += static_cast<double>(data.count(i, 0));
    }
    mean_L /= static_cast<double>(data.n());
    const auto L = static_cast<std::size_t>(std::lround(mean_L));
    const Design design = in.design == "auto" ? experiments::design_for(L) : parse_design(in.design);
    const experiments::BandwidthConstants defaults;
    const double c = in.bandwidth_c > 0.0                ? in.bandwidth_c
                     : design == Design::Sparse          ? defaults.sparse
                     : design == Design::Dense           ? defaults.dense
                                                         : defaults.very_dense;
    SmoothingOptions opt;
    opt.kernel = parse_kernel(in.kernel);
    opt.h_cross = in.h_cross > 0.0 ? in.h_cross : default_bandwidth(data.n(), mean_L, design, c);
    opt.h_marginal = in.h_marginal > 0.0 ? in.h_marginal : opt.h_cross;
    opt.pair_bandwidths = parse_pair_bandwidths(in.pair_bandwidths, data.p());
    opt.threads = threads;
    if (in.center) {
        data = center_partial(data, opt.h_marginal, opt.kernel);
    }

    bool binned = in.smoother == "binned";
    if (binned && !data.is_simplified()) {
        warn("variables do not share observation locations; using direct LLS instead of the binned smoother");
        binned = false;
    }
    pipe.smoothing = opt;
    if (binned) {
        pipe.binned.emplace(linear_bin(data, pipe.out_grid));
        pipe.fitter = std::make_unique<BinnedFitter>(*pipe.binned, opt);
        pipe.route = "binlls";
    } else {
        pipe.partial.emplace(data);
        pipe.fitter = std::make_unique<SmoothFitter>(data, pipe.out_grid, opt);
        pipe.route = "lls";
    }
    return pipe;
}

// ---------------------------------------------------------------- thresholding options

struct ThresholdCli {
    std::string estimator = "adaptive";
    std::string rule = "soft";
    std::string norm = "hs";
    bool keep_diagonal = false;

    void add_to(CLI::App& app, bool allow_none) {
        std::vector<std::string> estimators = {"adaptive", "universal"};
        if (allow_none) {
            estimators.push_back("none");
        }
        app.add_option("--estimator", estimator, "adaptive, universal" + std::string(allow_none ? " or none" : ""))
            ->check(CLI::IsMember(estimators));
        app.add_option("--rule", rule, "hard, soft, scad[:a=3.7] or al[:eta=3]");
        app.add_option("--norm", norm, "hs or sup")->check(CLI::IsMember({"hs", "sup"}));
        app.add_flag("--keep-diagonal,!--threshold-diagonal", keep_diagonal, "Never threshold diagonal entries");
    }

    ThresholdSpec spec() const {
        ThresholdSpec s;
        s.standardization = estimator == "universal" ? Standardization::Universal : Standardization::Adaptive;
        s.rule = ThresholdRule::parse(rule);
        s.norm = norm == "sup" ? NormKind::Supremum : NormKind::HilbertSchmidt;
        s.keep_diagonal = keep_diagonal;
        return s;
    }

    json to_json() const {
        return {{"estimator", estimator}, {"rule", rule}, {"norm", norm}, {"keep-diagonal", keep_diagonal}};
    }
};

struct CvCli {
    std::size_t splits = 5;
    std::vector<double> lambda_grid;
    std::size_t grid_size = 150;

    void add_to(CLI::App& app) {
        app.add_option("--splits", splits, "Cross-validation repetitions")->check(CLI::Range(1, 10000));
        app.add_option("--lambda-grid", lambda_grid, "Increasing candidate levels (default: automatic)");
        app.add_option("--grid-size", grid_size, "Points of the automatic grid")->check(CLI::Range(2, 100000));
    }

    json to_json() const { return {{"splits", splits}, {"lambda-grid", lambda_grid}, {"grid-size", grid_size}}; }

    CVResult run(const CovarianceFitter& fitter, const ThresholdSpec& spec, std::uint64_t seed, int threads) const {
        const PreparedCV prepared(fitter, splits, seed, threads);
        if (lambda_grid.empty()) {
            return prepared.evaluate(spec, prepared.auto_grid(spec, grid_size));
        }
        return prepared.evaluate(spec, lambda_grid);
    }
};

// ---------------------------------------------------------------- commands

struct SimulateCli {
    std::string model = "model1";
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t R = 21;
    std::size_t basis_dim = 50;
    std::size_t L = 0;
    double noise_sd = 0.5;
    bool general = false;
    std::string format = "csv";
    std::string out_dir = "sim";

    void add_to(CLI::App& app) {
        app.add_option("--model", model, "model1, model2 or banded");
        app.add_option("--n", n, "Subjects")->check(CLI::Range(2, 10000000));
        app.add_option("--p", p, "Variables")->check(CLI::Range(1, 100000));
        app.add_option("--R", R, "Grid points")->check(CLI::Range(2, 100000));
        app.add_option("--basis-dim", basis_dim, "Fourier basis size")->check(CLI::Range(1, 100000));
        app.add_option("--L", L, "Observations per curve; 0 emits fully observed curves");
        app.add_option("--noise-sd", noise_sd, "Measurement noise sd (partial data)");
        app.add_flag("--general", general, "Draw locations per (subject, variable)");
        app.add_option("--format", format, "csv or binary (fully observed data)")
            ->check(CLI::IsMember({"csv", "binary"}));
        app.add_option("--out-dir,-o", out_dir, "Output directory");
    }

    json to_json() const {
        return {{"model", model}, {"n", n},           {"p", p},         {"R", R},
                {"basis-dim", basis_dim}, {"L", L}, {"noise-sd", noise_sd}, {"general", general},
                {"format", format}, {"out-dir", out_dir}};
    }
};

int cmd_simulate(const SimulateCli& o, const GlobalOptions& g) {
    SimSpec spec;
    spec.model = parse_model(o.model);
    spec.n = o.n;
    spec.p = o.p;
    spec.basis_dim = o.basis_dim;
    spec.grid = make_uniform_grid(o.R);
    spec.seed = g.seed;
    const fs::path dir(o.out_dir);
    json outputs;
    if (o.L > 0) {
        PartialDesign design;
        design.L = o.L;
        design.noise_sd = o.noise_sd;
        design.shared_locations = !o.general;
        spec.partial = design;
        PartialSimulation sim = simulate_partial(spec);
        io::write_partial_csv(dir / "data.csv", sim.data);
        io::write_covfield(dir / "truth.cov", sim.truth);
        outputs = {{"data", "data.csv"}, {"truth", "truth.cov"}};
    } else {
        FullSimulation sim = simulate_full(spec);
        const std::string name = o.format == "binary" ? "data.bin" : "data.csv";
        if (o.format == "binary") {
            io::write_dense_binary(dir / name, sim.data);
        } else {
            io::write_dense_csv(dir / name, sim.data);
        }
        io::write_covfield(dir / "truth.cov", sim.truth);
        outputs = {{"data", name}, {"truth", "truth.cov"}};
    }
    write_manifest(dir, "simulate", g, o.to_json(), outputs);
    std::cout << fmt::format("wrote {} and truth.cov to {}\n", outputs["data"].get<std::string>(), dir.string());
    return kOk;
}

struct EstimateCli {
    InputOptions input;
    ThresholdCli threshold;
    CvCli cv;
    std::optional<double> lambda;
    bool csv = false;
    std::string out_dir = "estimate";

    void add_to(CLI::App& app) {
        input.add_to(app);
        threshold.add_to(app, true);
        cv.add_to(app);
        app.add_option("--lambda", lambda, "Threshold level; omitted selects it by cross-validation");
        app.add_flag("--csv", csv, "Also export the estimate as j,k,r1,r2,value CSV");
        app.add_option("--out-dir,-o", out_dir, "Output directory");
    }

    json to_json() const {
        json j = input.to_json();
        j.update(threshold.to_json());
        j.update(cv.to_json());
        if (lambda) {
            j["lambda"] = *lambda;
        }
        j["csv"] = csv;
        j["out-dir"] = out_dir;
        return j;
    }
};

int cmd_estimate(const EstimateCli& o, const GlobalOptions& g) {
    const Pipeline pipe = build_pipeline(o.input, g.threads);
    const fs::path dir(o.out_dir);
    const bool plain = o.threshold.estimator == "none";
    const ThresholdSpec spec = plain ? ThresholdSpec{} : o.threshold.spec();
    double lambda = o.lambda.value_or(0.0);
    json selection = {{"source", plain ? "none" : (o.lambda ? "given" : "cv")}};
    if (!plain && !o.lambda) {
        const CVResult cv = o.cv.run(*pipe.fitter, spec, g.seed, g.threads);
        lambda = cv.lambda;
        io::write_cv_csv(dir / "cv.csv", cv);
    }
    if (!plain && lambda < 0.0) {
        throw ParameterError("lambda must be nonnegative");
    }
    selection["lambda"] = lambda;

    const bool with_variance = !plain && spec.standardization == Standardization::Adaptive;
    auto [fit, diagnostics] = pipe.fit_all(with_variance);
    json outputs = {{"estimate", "estimate.cov"}, {"support", "support.csv"}, {"diagnostics", "diagnostics.json"}};
    if (plain) {
        io::write_covfield(dir / "estimate.cov", fit.sigma);
        SupportMask all = SupportMask::Constant(static_cast<Eigen::Index>(fit.sigma.p()),
                                                static_cast<Eigen::Index>(fit.sigma.p()), true);
        io::write_support_csv(dir / "support.csv", all, raw_norms(fit.sigma, NormKind::HilbertSchmidt));
        if (o.csv) {
            io::write_covfield_csv(dir / "estimate.csv", fit.sigma);
        }
    } else {
        const Eigen::MatrixXd norms = decision_norms(fit, spec.standardization, spec.norm);
        const ThresholdedEstimate est =
            threshold_by_norms(fit.sigma, norms, ThresholdOptions{lambda, spec.rule, spec.norm, spec.keep_diagonal});
        io::write_covfield(dir / "estimate.cov", est.field);
        io::write_support_csv(dir / "support.csv", est.support, norms);
        if (o.csv) {
            io::write_covfield_csv(dir / "estimate.csv", est.field);
        }
        diagnostics["support_size"] = est.support.count();
    }
    if (o.csv) {
        outputs["estimate_csv"] = "estimate.csv";
    }
    if (selection["source"] == "cv") {
        outputs["cv"] = "cv.csv";
    }
    diagnostics["selection"] = selection;
    diagnostics["p"] = fit.sigma.p();
    diagnostics["R"] = fit.sigma.resolution();
    io::write_json(dir / "diagnostics.json", diagnostics);
    write_manifest(dir, "estimate", g, o.to_json(), outputs);
    std::cout << fmt::format("lambda {}\n", io::format_double(lambda));
    return kOk;
}

struct CvCommandCli {
    InputOptions input;
    ThresholdCli threshold;
    CvCli cv;
    std::string out_dir = "cv";

    void add_to(CLI::App& app) {
        input.add_to(app);
        threshold.add_to(app, false);
        cv.add_to(app);
        app.add_option("--out-dir,-o", out_dir, "Output directory");
    }

    json to_json() const {
        json j = input.to_json();
        j.update(threshold.to_json());
        j.update(cv.to_json());
        j["out-dir"] = out_dir;
        return j;
    }
};

int cmd_cv(const CvCommandCli& o, const GlobalOptions& g) {
    const Pipeline pipe = build_pipeline(o.input, g.threads);
    const fs::path dir(o.out_dir);
    const CVResult result = o.cv.run(*pipe.fitter, o.threshold.spec(), g.seed, g.threads);
    io::write_cv_csv(dir / "cv.csv", result);
    write_manifest(dir, "cv", g, o.to_json(), {{"cv", "cv.csv"}});
    std::cout << io::format_double(result.lambda) << "\n";
    return kOk;
}

struct RocCli {
    InputOptions input;
    ThresholdCli threshold;
    std::string truth;
    std::string out_dir = "roc";

    void add_to(CLI::App& app) {
        input.add_to(app);
        threshold.add_to(app, false);
        app.add_option("--truth", truth, "True covariance (.cov)")->required();
        app.add_option("--out-dir,-o", out_dir, "Output directory");
    }

    json to_json() const {
        json j = input.to_json();
        j.update(threshold.to_json());
        j["truth"] = truth;
        j["out-dir"] = out_dir;
        return j;
    }
};

int cmd_roc(const RocCli& o, const GlobalOptions& g) {
    const Pipeline pipe = build_pipeline(o.input, g.threads);
    const CovField truth = io::read_covfield(o.truth);
    const ThresholdSpec spec = o.threshold.spec();
    auto [fit, diagnostics] = pipe.fit_all(spec.standardization == Standardization::Adaptive);
    if (truth.p() != fit.sigma.p()) {
        throw ShapeError("truth and data disagree in p");
    }
    const Eigen::MatrixXd norms = decision_norms(fit, spec.standardization, spec.norm);
    const auto curve = roc_sweep(norms, nonzero_support(truth), roc_levels(norms), spec.keep_diagonal);
    const fs::path dir(o.out_dir);
    io::write_roc_csv(dir / "roc.csv", curve);
    write_manifest(dir, "roc", g, o.to_json(), {{"roc", "roc.csv"}});
    std::cout << fmt::format("{} points written to {}\n", curve.size(), (dir / "roc.csv").string());
    return kOk;
}

struct MetricsCli {
    std::string estimate;
    std::string truth;

    void add_to(CLI::App& app) {
        app.add_option("--estimate", estimate, "Estimated covariance (.cov)")->required();
        app.add_option("--truth", truth, "True covariance (.cov)")->required();
    }
};

int cmd_metrics(const MetricsCli& o) {
    const CovField est = io::read_covfield(o.estimate);
    const CovField truth = io::read_covfield(o.truth);
    if (est.p() != truth.p() || !same_grid(est.grid(), truth.grid())) {
        throw ShapeError("estimate and truth differ in p or grid");
    }
    const SupportRates rates = support_metrics(nonzero_support(est), truth);
    json out = {{"frobenius", functional_frobenius(est, truth)},
                {"matrix_l1", functional_matrix_l1(est, truth)},
                {"tpr", rates.tpr},
                {"fpr", rates.fpr}};
    std::cout << out.dump(2) << "\n";
    return kOk;
}

struct BenchCli {
    std::string mode = "binlls";
    std::size_t n = 100;
    std::size_t p = 6;
    std::size_t L = 51;
    std::size_t R = 21;
    double h = 0.1;
    bool general = false;
    bool with_variance = false;

    void add_to(CLI::App& app) {
        app.add_option("--mode", mode, "lls or binlls")->check(CLI::IsMember({"lls", "binlls"}));
        app.add_option("--n", n, "Subjects")->check(CLI::Range(1, 10000000));
        app.add_option("--p", p, "Variables")->check(CLI::Range(1, 100000));
        app.add_option("--L", L, "Observations per curve")->check(CLI::Range(2, 100000));
        app.add_option("--R", R, "Grid points")->check(CLI::Range(2, 100000));
        app.add_option("--bandwidth", h, "Bandwidth");
        app.add_flag("--general", general, "Per-variable locations (direct LLS only)");
        app.add_flag("--with-variance", with_variance, "Include the variance surrogate");
    }
};

int cmd_bench(const BenchCli& o, const GlobalOptions& g) {
    SimSpec spec;
    spec.model = SimModel::Banded;
    spec.n = o.n;
    spec.p = o.p;
    spec.grid = make_uniform_grid(o.R);
    spec.seed = g.seed;
    PartialDesign design;
    design.L = o.L;
    design.shared_locations = !o.general;
    spec.partial = design;
    const PartialSimulation sim = simulate_partial(spec);
    SmoothingOptions opt;
    opt.h_cross = opt.h_marginal = o.h;
    opt.with_variance = o.with_variance;
    opt.threads = g.threads;

    const auto start = std::chrono::steady_clock::now();
    OpCounts counts;
    if (o.mode == "binlls") {
        const BinnedData binned = linear_bin(sim.data, spec.grid, &counts);
        counts += binned_smooth_covariance(binned, opt).counts;
    } else {
        counts += smooth_covariance(sim.data, spec.grid, opt).counts;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    json out = {{"mode", o.mode},
                {"layout", o.general ? "general" : "simplified"},
                {"n", o.n},
                {"p", o.p},
                {"L", o.L},
                {"R", o.R},
                {"kernel_evals", counts.kernel_evals},
                {"ops", counts.arithmetic_ops},
                {"wall_ms", ms}};
    std::cout << out.dump() << "\n";
    return kOk;
}

struct ReproduceCli {
    std::string table = "T2";
    std::string scale = "desk";
    std::size_t reps = 0;
    std::string out;

    void add_to(CLI::App& app) {
        app.add_option("--table", table, "T2, T3, T4, T5 or T6");
        app.add_option("--scale", scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
        app.add_option("--reps", reps, "Override the repetition count");
        app.add_option("--out,-o", out, "Also write the report to this file");
    }
};

int cmd_reproduce(const ReproduceCli& o, const GlobalOptions& g) {
    experiments::ReproduceOptions options;
    options.table = experiments::parse_table(o.table);
    options.scale = experiments::parse_scale(o.scale);
    options.reps = o.reps;
    options.threads = g.threads;
    if (g.seed_given) {
        options.seed = g.seed;
    }
    const auto report = experiments::reproduce(options, &std::cerr);
    std::cout << report.text;
    if (!o.out.empty()) {
        std::ofstream file(o.out);
        file << report.text;
        if (!file) {
            throw IoError("cannot write " + o.out);
        }
    }
    return kOk;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Adaptive functional thresholding of sparse covariance functions"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<ManifestConfig>());
    app.set_config("--config", "", "Key-value config file or a run manifest (flags win)");
    app.allow_config_extras(CLI::config_extras_mode::ignore);

    GlobalOptions global;
    app.add_option("--threads", global.threads, "Worker threads (0: $FTHRESH_THREADS or all cores)");
    app.add_option("--seed", global.seed, "Master random seed");

    SimulateCli sim;
    EstimateCli est;
    CvCommandCli cv;
    RocCli roc;
    MetricsCli metrics;
    BenchCli bench;
    ReproduceCli repro;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate data and the true covariance");
    sim.add_to(*sim_cmd);
    auto* est_cmd = app.add_subcommand("estimate", "Estimate and threshold a covariance function");
    est.add_to(*est_cmd);
    auto* cv_cmd = app.add_subcommand("cv", "Select lambda by cross-validation");
    cv.add_to(*cv_cmd);
    auto* roc_cmd = app.add_subcommand("roc", "Support recovery along the threshold path");
    roc.add_to(*roc_cmd);
    auto* metrics_cmd = app.add_subcommand("metrics", "Losses and support rates of an estimate");
    metrics.add_to(*metrics_cmd);
    auto* bench_cmd = app.add_subcommand("bench", "Time and count work for LLS or BinLLS");
    bench.add_to(*bench_cmd);
    auto* repro_cmd = app.add_subcommand("reproduce", "Run a simulation table");
    repro.add_to(*repro_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    global.seed_given = app.count("--seed") > 0;
    if (global.threads <= 0) {
        global.threads = default_threads();
    }

    try {
        if (*sim_cmd) {
            return cmd_simulate(sim, global);
        }
        if (*est_cmd) {
            return cmd_estimate(est, global);
        }
        if (*cv_cmd) {
            return cmd_cv(cv, global);
        }
        if (*roc_cmd) {
            return cmd_roc(roc, global);
        }
        if (*metrics_cmd) {
            return cmd_metrics(metrics);
        }
        if (*bench_cmd) {
            return cmd_bench(bench, global);
        }
        if (*repro_cmd) {
            return cmd_reproduce(repro, global);
        }
    } catch (const IoError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kShapeError;
    } catch (const DegenerateVarianceError& e) {
        std::cerr << "degenerate variance: " << e.what() << "\n";
        return kDegenerateVariance;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
