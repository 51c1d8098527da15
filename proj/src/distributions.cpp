#include "loclearn/distributions.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace loclearn {

Point SyntheticDistribution::sample_x(Rng& rng) const {
    switch (marginal) {
        case Marginal::kUniform:
            return rng.uniform_point(dims);
        case Marginal::kMixture: {
            Real u = rng.next_double();
            std::size_t pick = boxes.size() - 1;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                if (u < weights[i]) {
                    pick = i;
                    break;
                }
                u -= weights[i];
            }
            Point x(dims);
            for (std::size_t k = 0; k < dims; ++k)
                x[k] = rng.uniform(boxes[pick].lo[k], boxes[pick].hi[k]);
            return x;
        }
        case Marginal::kPointSet: {
            const std::size_t pick = rng.next_below(point_set.size());
            return point_set[pick];
        }
    }
    return Point(dims, 0.0);
}

Real SyntheticDistribution::base_value(std::span<const Real> x) const {
    return base ? base->evaluate(x) : constant;
}

Real SyntheticDistribution::label(std::span<const Real> x, Rng& rng) const {
    switch (target) {
        case Target::kLipschitzGt:
            return base_value(x);
        case Target::kConstant:
            return constant;
        case Target::kBernoulliNoise: {
            const Real b = base_value(x);
            if (rng.bernoulli(noise_rate)) return rng.bernoulli(b) ? 1.0 : 0.0;
            return b;
        }
        case Target::kThreshold:
            return base_value(x) >= threshold_level ? 1.0 : 0.0;
        case Target::kPointLabels: {
            for (std::size_t i = 0; i < point_set.size(); ++i) {
                if (std::equal(point_set[i].begin(), point_set[i].end(), x.begin(), x.end()))
                    return point_labels[i];
            }
            throw PreconditionViolated("point-labels target queried off the point set");
        }
    }
    return constant;
}

void SyntheticDistribution::validate() const {
    if (dims < 1) throw ConfigError("distribution dims must be >= 1");
    if (marginal == Marginal::kMixture) {
        if (boxes.empty() || boxes.size() != weights.size())
            throw ConfigError("mixture needs matching boxes and weights");
        Real total = 0.0;
        for (Real w : weights) {
            if (w < 0.0) throw ConfigError("mixture weight must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
        for (const auto& b : boxes) {
            if (b.dims() != dims) throw ConfigError("mixture box dims mismatch");
            for (std::size_t k = 0; k < dims; ++k)
                if (b.lo[k] < 0.0 || b.hi[k] > 1.0 || b.lo[k] > b.hi[k])
                    throw ConfigError("mixture box must sit inside [0,1]^d");
        }
    }
    if (marginal == Marginal::kPointSet) {
        if (point_set.empty()) throw ConfigError("point set marginal needs points");
        for (const auto& p : point_set)
            if (p.size() != dims) throw ConfigError("point set dims mismatch");
    }
    if (target == Target::kLipschitzGt && !base)
        throw ConfigError("lipschitz_gt target needs a base function");
    if (target == Target::kConstant && (constant < 0.0 || constant > 1.0))
        throw ConfigError("constant label must lie in [0,1]");
    if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("noise rate must lie in [0,1]");
    if (target == Target::kPointLabels) {
        if (marginal != Marginal::kPointSet)
            throw ConfigError("point-labels target needs a point set marginal");
        if (point_labels.size() != point_set.size())
            throw ConfigError("point_labels size must match point_set");
        for (Real y : point_labels)
            if (y < 0.0 || y > 1.0) throw ConfigError("point label outside [0,1]");
    }
}

std::pair<Point, Real> sample_pair(const SyntheticDistribution& dist, Rng& rng) {
    Point x = dist.sample_x(rng);
    const Real y = dist.label(x, rng);
    return {std::move(x), y};
}

SyntheticDistribution SyntheticDistribution::uniform_constant(std::size_t dims, Real c) {
    SyntheticDistribution d;
    d.dims = dims;
    d.target = Target::kConstant;
    d.constant = c;
    return d;
}

SyntheticDistribution SyntheticDistribution::uniform_gt(
    std::shared_ptr<const AnchoredLipschitzFn> gt) {
    SyntheticDistribution d;
    d.dims = gt->dims();
    d.target = Target::kLipschitzGt;
    d.base = std::move(gt);
    return d;
}

SyntheticDistribution SyntheticDistribution::uniform_noise(std::size_t dims, Real base,
                                                           Real rate) {
    SyntheticDistribution d;
    d.dims = dims;
    d.target = Target::kBernoulliNoise;
    d.constant = base;
    d.noise_rate = rate;
    return d;
}

namespace {

const char* marginal_name(SyntheticDistribution::Marginal m) {
    switch (m) {
        case SyntheticDistribution::Marginal::kUniform: return "uniform";
        case SyntheticDistribution::Marginal::kMixture: return "mixture";
        case SyntheticDistribution::Marginal::kPointSet: return "pointset";
    }
    return "uniform";
}

const char* target_name(SyntheticDistribution::Target t) {
    switch (t) {
        case SyntheticDistribution::Target::kLipschitzGt: return "lipschitz_gt";
        case SyntheticDistribution::Target::kConstant: return "constant";
        case SyntheticDistribution::Target::kBernoulliNoise: return "bernoulli_noise";
        case SyntheticDistribution::Target::kThreshold: return "threshold";
        case SyntheticDistribution::Target::kPointLabels: return "point_labels";
    }
    return "constant";
}

}  // namespace

nlohmann::json SyntheticDistribution::to_json() const {
    nlohmann::json j;
    j["marginal"] = marginal_name(marginal);
    j["dims"] = dims;
    if (marginal == Marginal::kMixture) {
        nlohmann::json bs = nlohmann::json::array();
        for (const auto& b : boxes) bs.push_back({{"lo", b.lo}, {"hi", b.hi}});
        j["boxes"] = std::move(bs);
        j["weights"] = weights;
    }
    if (marginal == Marginal::kPointSet) {
        j["points"] = point_set;
        if (!point_labels.empty()) j["point_labels"] = point_labels;
    }
    j["target"] = target_name(target);
    j["constant"] = constant;
    j["noise_rate"] = noise_rate;
    j["threshold_level"] = threshold_level;
    if (base) {
        std::vector<Point> pts;
        for (std::size_t i = 0; i < base->anchor_count(); ++i) pts.push_back(base->anchors().row(i));
        j["base"] = {{"points", pts},
                     {"values", base->values()},
                     {"L", base->lipschitz_constant()}};
    }
    return j;
}

SyntheticDistribution SyntheticDistribution::from_json(const nlohmann::json& j) {
    SyntheticDistribution d;
    const std::string m = j.value("marginal", "uniform");
    if (m == "uniform")
        d.marginal = Marginal::kUniform;
    else if (m == "mixture")
        d.marginal = Marginal::kMixture;
    else if (m == "pointset")
        d.marginal = Marginal::kPointSet;
    else
        throw ConfigError("unknown marginal kind: " + m);
    d.dims = j.at("dims").get<std::size_t>();
    if (d.marginal == Marginal::kMixture) {
        for (const auto& bj : j.at("boxes"))
            d.boxes.push_back(Box{bj.at("lo").get<std::vector<Real>>(),
                                  bj.at("hi").get<std::vector<Real>>()});
        d.weights = j.at("weights").get<std::vector<Real>>();
    }
    if (d.marginal == Marginal::kPointSet) {
        d.point_set = j.at("points").get<std::vector<Point>>();
        if (j.contains("point_labels"))
            d.point_labels = j.at("point_labels").get<std::vector<Real>>();
    }
    const std::string t = j.value("target", "constant");
    if (t == "lipschitz_gt")
        d.target = Target::kLipschitzGt;
    else if (t == "constant")
        d.target = Target::kConstant;
    else if (t == "bernoulli_noise")
        d.target = Target::kBernoulliNoise;
    else if (t == "threshold")
        d.target = Target::kThreshold;
    else if (t == "point_labels")
        d.target = Target::kPointLabels;
    else
        throw ConfigError("unknown target kind: " + t);
    d.constant = j.value("constant", 0.5);
    d.noise_rate = j.value("noise_rate", 1.0);
    d.threshold_level = j.value("threshold_level", 0.5);
    if (j.contains("base")) {
        const auto& bj = j.at("base");
        d.base = std::make_shared<const AnchoredLipschitzFn>(
            bj.at("points").get<std::vector<Point>>(), bj.at("values").get<std::vector<Real>>(),
            bj.at("L").get<Real>());
    }
    d.validate();
    return d;
}

AnchoredLipschitzFn random_lipschitz_fn(std::size_t dims, Real lipschitz, std::size_t n_anchors,
                                        Rng& rng) {
    std::vector<Point> points;
    std::vector<Real> values;
    points.reserve(n_anchors);
    values.reserve(n_anchors);
    for (std::size_t i = 0; i < n_anchors; ++i) {
        Point x = rng.uniform_point(dims);
        Real lo = 0.0, hi = 1.0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            const Real d = sup_dist(x, points[j]);
            lo = std::max(lo, values[j] - lipschitz * d);
            hi = std::min(hi, values[j] + lipschitz * d);
        }
        // the partial McShane extension keeps the band nonempty
        const Real v = lo <= hi ? rng.uniform(lo, hi) : 0.5 * (lo + hi);
        points.push_back(std::move(x));
        values.push_back(clamp01(v));
    }
    return AnchoredLipschitzFn(std::move(points), std::move(values), lipschitz);
}

}  // namespace loclearn
