#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dkbo/error.hpp"

namespace dkbo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Meta = std::map<std::string, std::string>;

/// A finite design space: one embedding row per candidate, optional objective
/// labels, and opaque string ids. Immutable once constructed; the constructor
/// enforces every invariant so an invalid pool can never exist.
class CandidatePool {
public:
    CandidatePool(std::vector<std::string> ids, Matrix X, std::optional<Vector> y = std::nullopt,
                  Meta meta = {})
        : ids_(std::move(ids)), X_(std::move(X)), y_(std::move(y)), meta_(std::move(meta)) {
        validate();
        index_.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
    }

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(X_.cols()); }
    bool labeled() const noexcept { return y_.has_value(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Matrix& X() const noexcept { return X_; }
    const Meta& meta() const noexcept { return meta_; }

    const Vector& y() const {
        if (!y_) throw DataError("pool has no objective labels");
        return *y_;
    }
    const std::optional<Vector>& labels() const noexcept { return y_; }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(const std::string& id) const {
        auto idx = find(id);
        if (!idx) throw DataError("unknown candidate id '" + id + "'");
        return *idx;
    }

    /// Rows of X selected by index, in the given order.
    Matrix rows(const std::vector<std::size_t>& idx) const {
        Matrix out(static_cast<Eigen::Index>(idx.size()), X_.cols());
        for (std::size_t r = 0; r < idx.size(); ++r)
            out.row(static_cast<Eigen::Index>(r)) = X_.row(static_cast<Eigen::Index>(idx[r]));
        return out;
    }

    Vector labels_at(const std::vector<std::size_t>& idx) const {
        const Vector& all = y();
        Vector out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            out(static_cast<Eigen::Index>(r)) = all(static_cast<Eigen::Index>(idx[r]));
        return out;
    }

    CandidatePool with_labels(std::optional<Vector> y) const {
        return CandidatePool(ids_, X_, std::move(y), meta_);
    }
    CandidatePool with_embeddings(Matrix X) const {
        return CandidatePool(ids_, std::move(X), y_, meta_);
    }
    CandidatePool with_meta(Meta meta) const { return CandidatePool(ids_, X_, y_, std::move(meta)); }

    friend bool operator==(const CandidatePool& a, const CandidatePool& b) {
        return a.ids_ == b.ids_ && a.X_.rows() == b.X_.rows() && a.X_.cols() == b.X_.cols() &&
               a.X_ == b.X_ && a.y_.has_value() == b.y_.has_value() &&
               (!a.y_ || *a.y_ == *b.y_) && a.meta_ == b.meta_;
    }

private:
    void validate() const {
        if (ids_.empty()) throw DataError("pool must contain at least one candidate");
        if (X_.cols() < 1) throw DataError("embedding dimension must be at least 1");
        if (static_cast<std::size_t>(X_.rows()) != ids_.size())
            throw DataError("id count " + std::to_string(ids_.size()) + " does not match " +
                            std::to_string(X_.rows()) + " embedding rows");
        if (y_ && static_cast<std::size_t>(y_->size()) != ids_.size())
            throw DataError("label count " + std::to_string(y_->size()) + " does not match " +
                            std::to_string(ids_.size()) + " candidates");
        std::unordered_map<std::string, std::size_t> seen;
        seen.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (!seen.emplace(ids_[i], i).second)
                throw DataError("duplicate id '" + ids_[i] + "'");
            const auto r = static_cast<Eigen::Index>(i);
            if (!X_.row(r).allFinite())
                throw DataError("non-finite embedding value for id '" + ids_[i] + "'");
            if (y_ && !std::isfinite((*y_)(r)))
                throw DataError("non-finite label for id '" + ids_[i] + "'");
        }
    }

    std::vector<std::string> ids_;
    Matrix X_;
    std::optional<Vector> y_;
    Meta meta_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Affine map between the raw objective scale and the zero-mean unit-variance
/// scale the GP is fitted on.
struct Standardizer {
    double y_mean = 0.0;
    double y_std = 1.0;
    bool degenerate = false;

    double transform(double v) const { return (v - y_mean) / y_std; }
    double inverse(double u) const { return y_mean + y_std * u; }
    Vector transform(const Vector& v) const { return (v.array() - y_mean) / y_std; }
    Vector inverse(const Vector& u) const { return (u.array() * y_std + y_mean).matrix(); }
    /// Variances scale by the square of the standard deviation.
    double inverse_variance(double var) const { return var * y_std * y_std; }

    static Standardizer identity() { return {}; }
};

/// Centers and scales y to zero mean and unit sample standard deviation.
/// Constant input falls back to y_std = 1 and sets the degenerate flag.
inline std::pair<Vector, Standardizer> standardize_targets(const Vector& y) {
    if (y.size() < 2) throw DataError("standardization needs at least two targets");
    if (!y.allFinite()) throw DataError("standardization input contains non-finite values");
    const double n = static_cast<double>(y.size());
    const double mean = y.sum() / n;
    const double ss = (y.array() - mean).square().sum();
    Standardizer s;
    s.y_mean = mean;
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd > 0.0 && std::isfinite(sd)) {
        s.y_std = sd;
    } else {
        s.y_std = 1.0;
        s.degenerate = true;
    }
    return {s.transform(y), s};
}

/// Per-dimension min-max scaling to [0, 1]; constant columns map to 0.
inline CandidatePool minmax_scale(const CandidatePool& pool) {
    Matrix X = pool.X();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double lo = X.col(j).minCoeff();
        const double hi = X.col(j).maxCoeff();
        if (hi > lo)
            X.col(j) = (X.col(j).array() - lo) / (hi - lo);
        else
            X.col(j).setZero();
    }
    Meta meta = pool.meta();
    meta["scaling"] = "minmax";
    return CandidatePool(pool.ids(), std::move(X), pool.labels(), std::move(meta));
}

} // namespace dkbo
