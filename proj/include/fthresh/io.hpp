#ifndef FTHRESH_IO_HPP
#define FTHRESH_IO_HPP

#include "fthresh/covfield.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/estimate.hpp"
#include "fthresh/partial.hpp"
#include "fthresh/smooth.hpp"
#include "fthresh/tuning.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>

namespace fthresh::io {

using nlohmann::json;
namespace fs = std::filesystem;

/**
 * Binary containers: one line of JSON header terminated by '\n', then
 * little-endian IEEE-754 doubles.
 *
 * CovField ("fthresh-covfield"): header {format, version, p, R, grid,
 * byte_order, dtype}; blocks (j, k) for j <= k in row-major order of (j, k),
 * each R x R row-major. The lower blocks are reconstructed by symmetry.
 *
 * DenseSample ("fthresh-dense"): header {format, version, n, p, R, grid,
 * byte_order, dtype}; values X_ij(u_r) with r fastest, then j, then i.
 */
void write_covfield(const fs::path& path, const CovField& field);
CovField read_covfield(const fs::path& path);

/// Debug export with header j,k,r1,r2,value over every (j, k) and grid pair.
void write_covfield_csv(const fs::path& path, const CovField& field);

void write_dense_binary(const fs::path& path, const DenseSample& data);
DenseSample read_dense_binary(const fs::path& path);

/// Long format subject_id,variable_id,grid_index,value.
void write_dense_csv(const fs::path& path, const DenseSample& data);

/**
 * Reads the long dense format. Ids are arbitrary integers, mapped to indices
 * in increasing order; every (subject, variable, grid_index) must appear once.
 * Without a grid, a uniform grid with max(grid_index) + 1 points is used.
 */
DenseSample read_dense_csv(const fs::path& path, GridPtr grid = nullptr);

/// Long format subject_id,variable_id,location,value, rows in storage order.
void write_partial_csv(const fs::path& path, const PartialSample& data);

/// Reads the long partial format; shared locations within a subject select the simplified layout.
PartialSample read_partial_csv(const fs::path& path);

/// Support edge list j,k,norm over j <= k with the entry in the support.
void write_support_csv(const fs::path& path, const SupportMask& support, const Eigen::MatrixXd& norms);

void write_cv_csv(const fs::path& path, const CVResult& result);
void write_roc_csv(const fs::path& path, std::span<const RocPoint> curve);

json diagnostics_json(const SmoothedCovariance& smoothed);

/// Pretty-printed JSON with a trailing newline.
void write_json(const fs::path& path, const json& value);
json read_json(const fs::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}

#endif
