#include "fthresh/partial.hpp"

#include "fthresh/errors.hpp"

#include <cmath>
#include <string>

namespace fthresh {

PartialSample::PartialSample(std::size_t p, bool simplified, std::vector<Subject> subjects)
    : p_(p), simplified_(simplified), subjects_(std::move(subjects)) {
    validate();
}

PartialSample PartialSample::simplified(std::vector<std::vector<double>> locations,
                                        const std::vector<Eigen::MatrixXd>& values) {
    if (locations.size() != values.size()) {
        throw ShapeError("need one value matrix per subject");
    }
    if (locations.empty()) {
        throw InsufficientDataError("partial sample has no subjects");
    }
    const auto p = static_cast<std::size_t>(values.front().cols());
    std::vector<Subject> subjects(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i) {
        const Eigen::MatrixXd& z = values[i];
        if (static_cast<std::size_t>(z.cols()) != p || static_cast<std::size_t>(z.rows()) != locations[i].size()) {
            throw ShapeError("subject " + std::to_string(i) + ": values must be L_i x p");
        }
        Subject& s = subjects[i];
        s.locations.push_back(std::move(locations[i]));
        s.values.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            const auto col = z.col(static_cast<Eigen::Index>(j));
            s.values[j].assign(col.data(), col.data() + col.size());
        }
    }
    return PartialSample(p, true, std::move(subjects));
}

PartialSample PartialSample::general(std::vector<std::vector<CurveObservations>> curves) {
    if (curves.empty()) {
        throw InsufficientDataError("partial sample has no subjects");
    }
    const std::size_t p = curves.front().size();
    bool shared = true;
    for (const auto& subject : curves) {
        if (subject.size() != p) {
            throw ShapeError("every subject needs the same number of variables");
        }
        for (std::size_t j = 1; j < p && shared; ++j) {
            shared = subject[j].locations == subject[0].locations;
        }
    }

    std::vector<Subject> subjects(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        Subject& s = subjects[i];
        s.values.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            if (curves[i][j].locations.size() != curves[i][j].values.size()) {
                throw ShapeError("locations and values differ in length");
            }
            s.values[j] = std::move(curves[i][j].values);
            if (!shared || j == 0) {
                s.locations.push_back(std::move(curves[i][j].locations));
            }
        }
    }
    return PartialSample(p, shared, std::move(subjects));
}

void PartialSample::validate() const {
    if (p_ == 0) {
        throw ShapeError("partial sample needs at least one variable");
    }
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const Subject& s = subjects_[i];
        for (std::size_t j = 0; j < p_; ++j) {
            auto loc = locations(i, j);
            auto val = values(i, j);
            if (loc.size() != val.size()) {
                throw ShapeError("locations and values differ in length");
            }
            if (loc.empty()) {
                throw InsufficientDataError("subject " + std::to_string(i) + " has an empty curve");
            }
            for (std::size_t l = 0; l < loc.size(); ++l) {
                if (!(loc[l] >= 0.0 && loc[l] <= 1.0)) {
                    throw ParameterError("observation locations must lie in [0, 1]");
                }
                if (!std::isfinite(val[l])) {
                    throw ParameterError("observation values must be finite");
                }
            }
        }
        (void)s;
    }
}

std::vector<std::size_t> PartialSample::counts(std::size_t j) const {
    std::vector<std::size_t> out(n());
    for (std::size_t i = 0; i < n(); ++i) {
        out[i] = count(i, j);
    }
    return out;
}

std::size_t PartialSample::total_locations() const {
    std::size_t total = 0;
    for (const Subject& s : subjects_) {
        for (const auto& loc : s.locations) {
            total += loc.size();
        }
    }
    return total;
}

PartialSample PartialSample::subset(std::span<const std::size_t> subjects) const {
    std::vector<Subject> out;
    out.reserve(subjects.size());
    for (std::size_t i : subjects) {
        if (i >= n()) {
            throw ShapeError("subject index out of range");
        }
        out.push_back(subjects_[i]);
    }
    if (out.empty()) {
        throw InsufficientDataError("empty subject subset");
    }
    return PartialSample(p_, simplified_, std::move(out));
}

PartialSample PartialSample::rescaled(std::span<const double> factors) const {
    if (factors.size() != p_) {
        throw ShapeError("need one scale factor per variable");
    }
    return transformed([&](std::size_t, std::size_t j, std::size_t, double, double z) { return factors[j] * z; });
}

}
