#ifndef FTHRESH_EXPERIMENTS_HPP
#define FTHRESH_EXPERIMENTS_HPP

#include "fthresh/simgen.hpp"
#include "fthresh/smooth.hpp"
#include "fthresh/threshold.hpp"
#include "fthresh/tuning.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fthresh::experiments {

/// Bandwidth constants c in h = c * rate for each design, and for pre-smoothing h_X = c * L^{-1/5}.
struct BandwidthConstants {
    double sparse = 0.3;
    double dense = 0.6;
    double very_dense = 0.2;
    double presmooth = 0.25;
};

/// L <= 11 sparse, L <= 51 dense, larger very dense.
Design design_for(std::size_t L);

/// Global cross and marginal bandwidths for n subjects with L observations each.
SmoothingOptions smoothing_for(std::size_t n, std::size_t L, const BandwidthConstants& constants);

double presmooth_bandwidth(std::size_t L, const BandwidthConstants& constants);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe summarize(std::span<const double> values);

/// Losses and support rates of one estimate against the truth.
struct Outcome {
    double frobenius = 0.0;
    double matrix_l1 = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double lambda = 0.0;
};

/**
 * Monte Carlo design for CV-tuned thresholding: fully observed curves, or
 * partially observed curves smoothed by BinLLS when `L` is set.
 */
struct ThresholdStudy {
    SimModel model = SimModel::Model1;
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t R = 21;
    std::optional<std::size_t> L;
    std::size_t reps = 20;
    std::uint64_t seed = 20240601;
    std::vector<ThresholdRule> rules = {ThresholdRule::hard(), ThresholdRule::soft(), ThresholdRule::scad(),
                                        ThresholdRule::adaptive_lasso()};
    bool adaptive = true;
    bool universal = true;
    bool keep_diagonal = true;
    std::size_t cv_splits = 5;
    BandwidthConstants bandwidths;
    int threads = 1;
};

struct ThresholdRep {
    /// Indexed like `rules`; empty when the standardization was not requested.
    std::vector<Outcome> adaptive;
    std::vector<Outcome> universal;
    /// Unthresholded estimate (sample covariance, or the smoothed estimate).
    Outcome plain;
};

ThresholdRep run_threshold_rep(const ThresholdStudy& study, std::size_t rep);
std::vector<ThresholdRep> run_threshold_study(const ThresholdStudy& study);

/// Low-dimensional smoother comparison on the banded model: BinLLS, LLS and their pre-smoothing variants.
struct SmootherStudy {
    std::size_t n = 100;
    std::size_t p = 6;
    std::size_t R = 21;
    std::size_t L = 11;
    std::size_t reps = 20;
    std::uint64_t seed = 20240602;
    bool direct = true;
    bool presmooth = true;
    BandwidthConstants bandwidths;
    int threads = 1;
};

struct TimedOutcome {
    double frobenius = 0.0;
    double matrix_l1 = 0.0;
    double seconds = 0.0;
};

struct SmootherRep {
    TimedOutcome binlls;
    std::optional<TimedOutcome> lls;
    std::optional<TimedOutcome> binlls_p;
    std::optional<TimedOutcome> lls_p;
    TimedOutcome sample;
};

SmootherRep run_smoother_rep(const SmootherStudy& study, std::size_t rep);
std::vector<SmootherRep> run_smoother_study(const SmootherStudy& study);

/// Mean ROC curves of adaptive and universal soft thresholding on full data, read off at fixed FPR levels.
struct RocStudy {
    SimModel model = SimModel::Model1;
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t R = 21;
    std::size_t reps = 20;
    std::uint64_t seed = 20240603;
    std::vector<double> fpr_grid;
    bool keep_diagonal = true;
    int threads = 1;
};

struct RocSummary {
    std::vector<double> fpr;
    std::vector<double> adaptive_tpr;
    std::vector<double> universal_tpr;
};

RocSummary run_roc_study(const RocStudy& study);

/// Evenly spaced FPR levels 0.01, 0.02, ..., 0.30.
std::vector<double> default_fpr_grid();

enum class TableId { T2, T3, T4, T5, T6 };
enum class Scale { Desk, Full };

TableId parse_table(std::string_view text);
Scale parse_scale(std::string_view text);
std::string_view table_name(TableId table);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ReproduceOptions {
    TableId table = TableId::T2;
    Scale scale = Scale::Desk;
    /// Overrides the scale's repetition count when nonzero.
    std::size_t reps = 0;
    std::uint64_t seed = 20240601;
    int threads = 1;
    BandwidthConstants bandwidths;
};

struct ReproduceReport {
    std::string text;
    std::vector<Check> checks;
};

/// Runs the table's Monte Carlo design and formats mean (se) rows plus the tolerance checks.
ReproduceReport reproduce(const ReproduceOptions& options, std::ostream* progress = nullptr);

}

#endif
