#include "loclearn/nw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "loclearn/kernels.hpp"

namespace loclearn {

namespace {

std::vector<Real> squared(const std::vector<Real>& eig) {
    std::vector<Real> sq(eig.size());
    for (std::size_t k = 0; k < eig.size(); ++k) sq[k] = eig[k] * eig[k];
    return sq;
}

void check_transform(const DiagonalTransform& a, std::size_t dims) {
    if (a.eigenvalues.size() != dims) throw DimensionMismatch("transform dims mismatch");
    for (Real e : a.eigenvalues)
        if (!(e > 0.0)) throw PreconditionViolated("eigenvalues must be positive");
}

}  // namespace

NwDataset::NwDataset(SoaPoints points, NwLabelSource source)
    : points_(std::move(points)), source_(std::move(source)) {}

NwDataset NwDataset::with_labels(SoaPoints points, std::vector<int> labels) {
    if (labels.size() != points.size()) throw DimensionMismatch("label count mismatch");
    NwDataset d(std::move(points),
                [labels](std::size_t index, std::span<const Real>) { return labels[index]; });
    return d;
}

int NwDataset::label(std::size_t index) const {
    auto it = memo_.find(index);
    if (it != memo_.end()) return it->second;
    const Point x = points_.row(index);
    const int y = source_(index, x);
    if (y != 0 && y != 1) throw PreconditionViolated("NW labels must be 0 or 1");
    memo_.emplace(index, y);
    return y;
}

void NwDataset::materialize() const {
    for (std::size_t i = 0; i < points_.size(); ++i) label(i);
}

Real nw_kernel(const DiagonalTransform& a, std::span<const Real> x, std::span<const Real> y) {
    if (x.size() != y.size()) throw DimensionMismatch("kernel point dims mismatch");
    check_transform(a, x.size());
    Real sq = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const Real t = a.eigenvalues[k] * (x[k] - y[k]);
        sq += t * t;
    }
    return 1.0 / (1.0 + sq);
}

std::vector<Real> prediction_probs(const DiagonalTransform& a, const SoaPoints& points,
                                   std::span<const Real> q) {
    if (points.empty()) throw EmptyDataset("prediction_probs needs at least one point");
    check_transform(a, points.dims());
    const std::size_t n = points.size();
    std::vector<Real> p(n);
    Real total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Real sq = 0.0;
        for (std::size_t k = 0; k < points.dims(); ++k) {
            const Real t = a.eigenvalues[k] * (q[k] - points.coord(k, j));
            sq += t * t;
        }
        p[j] = 1.0 / (1.0 + sq);
        total += p[j];
    }
    for (auto& v : p) v /= total;
    return p;
}

std::vector<Real> eigenvalue_grid(Real epsilon, Real lo, Real hi) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon("epsilon must lie in (0,1]");
    if (!(lo > 0.0) || hi < lo) throw PreconditionViolated("need 0 < lo <= hi");
    std::vector<Real> grid{lo};
    for (Real v = lo * (1.0 + epsilon); v < hi - 1e-12; v *= (1.0 + epsilon)) grid.push_back(v);
    if (grid.back() < hi - 1e-12) grid.push_back(hi);
    return grid;
}

std::vector<DiagonalTransform> epsilon_net(std::size_t dims, Real epsilon, Real lo, Real hi) {
    const std::vector<Real> grid = eigenvalue_grid(epsilon, lo, hi);
    std::vector<DiagonalTransform> net;
    std::vector<std::size_t> odo(dims, 0);
    while (true) {
        DiagonalTransform a;
        a.eigenvalues.resize(dims);
        for (std::size_t k = 0; k < dims; ++k) a.eigenvalues[k] = grid[odo[k]];
        net.push_back(std::move(a));
        std::size_t k = 0;
        while (k < dims && ++odo[k] == grid.size()) odo[k++] = 0;
        if (k == dims) break;
    }
    return net;
}

Real exact_nw_loss(const DiagonalTransform& a, const NwDataset& dataset, const NwEvalSet& eval) {
    if (dataset.size() == 0) throw EmptyDataset("exact_nw_loss needs a dataset");
    if (eval.points.empty()) throw EmptyInput("exact_nw_loss needs evaluation points");
    check_transform(a, dataset.dims());
    dataset.materialize();

    // split the dataset by label so each eval point costs two kernel sums
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (dataset.label(i) == 0 ? zeros : ones).push_back(i);
    const std::size_t d = dataset.dims();
    auto pack = [&](const std::vector<std::size_t>& idx) {
        SoaPoints block(d, idx.size());
        for (std::size_t t = 0; t < idx.size(); ++t)
            for (std::size_t k = 0; k < d; ++k)
                block.coord(k, t) = dataset.points().coord(k, idx[t]);
        return block;
    };
    const SoaPoints block0 = pack(zeros);
    const SoaPoints block1 = pack(ones);
    const std::vector<Real> eig_sq = squared(a.eigenvalues);
    const auto& sum_fn = kernels::active().kernel_sum;

    Real total = 0.0;
    for (std::size_t t = 0; t < eval.points.size(); ++t) {
        const Real* q = eval.points[t].data();
        const Real s0 =
            block0.empty() ? 0.0 : sum_fn(block0.dim_begin(0), block0.size(), d, eig_sq.data(), q);
        const Real s1 =
            block1.empty() ? 0.0 : sum_fn(block1.dim_begin(0), block1.size(), d, eig_sq.data(), q);
        total += (eval.labels[t] == 1 ? s0 : s1) / (s0 + s1);
    }
    return total / static_cast<Real>(eval.points.size());
}

std::string KdeMode::name() const {
    if (kind == Kind::kExact) return "exact";
    return "subsample:" + std::to_string(subsample);
}

KdeMode KdeMode::parse(const std::string& text) {
    if (text == "exact") return exact();
    const std::string prefix = "subsample:";
    if (text.rfind(prefix, 0) == 0) {
        const std::size_t m = std::stoull(text.substr(prefix.size()));
        if (m == 0) throw ConfigError("subsample size must be positive");
        return subsample_m(m);
    }
    throw ConfigError("kde mode must be 'exact' or 'subsample:<m>'");
}

nlohmann::json NwEstimate::to_json() const {
    return {{"value", value},
            {"argmin_eigenvalues", argmin.eigenvalues},
            {"n_labels", n_labels},
            {"net_size", net_size},
            {"seed", seed},
            {"kde_mode", kde_mode}};
}

std::size_t nw_pair_count(Real epsilon, Real delta, std::size_t dims) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon("epsilon must lie in (0,1]");
    if (!(delta > 0.0) || delta >= 1.0) throw PreconditionViolated("delta must lie in (0,1)");
    const Real m = (1.0 / (epsilon * epsilon)) *
                   (static_cast<Real>(dims) * std::log(1.0 / epsilon) + std::log(1.0 / delta));
    return static_cast<std::size_t>(std::max(1.0, std::ceil(m)));
}

NwEstimate nw_error(const NwDataset& dataset, const SyntheticDistribution& dist, Real epsilon,
                    Real delta, std::uint64_t seed, const KdeMode& mode) {
    if (dataset.size() == 0) throw EmptyDataset("nw_error needs a dataset");
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.dims();
    const std::size_t m_pairs = nw_pair_count(epsilon, delta, d);
    const std::size_t labels_before = dataset.labels_fetched();

    const Rng root(seed);
    Rng pair_rng = root.child("nw-pairs");
    Rng sub_rng = root.child("nw-subsample");

    struct PairDraw {
        Point z;
        Real diff = 0.0;       // |f(z) - f(z_tilde)|
        std::size_t partner = 0;
        Real k_identity = 0.0; // K_I(z, partner)
        Real d_identity = 0.0; // sum_j K_I(z, x_j)
        std::vector<std::size_t> subsample;
    };
    std::vector<PairDraw> draws(m_pairs);
    std::vector<Real> weights(n);

    const bool use_subsample = mode.kind == KdeMode::Kind::kSubsample && mode.subsample < n;
    std::vector<std::size_t> pick_buffer(n);
    std::iota(pick_buffer.begin(), pick_buffer.end(), 0);

    for (std::size_t i = 0; i < m_pairs; ++i) {
        PairDraw& draw = draws[i];
        draw.z = dist.sample_x(pair_rng);
        const Real fz = dist.label(draw.z, pair_rng);
        if (fz != 0.0 && fz != 1.0)
            throw PreconditionViolated("NW mode needs {0,1} labels from the distribution");

        Real total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            Real sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const Real t = draw.z[k] - dataset.points().coord(k, j);
                sq += t * t;
            }
            weights[j] = 1.0 / (1.0 + sq);
            total += weights[j];
        }
        // exact categorical draw by prefix-sum inversion
        const Real u = pair_rng.next_double() * total;
        Real acc = 0.0;
        std::size_t partner = n - 1;
        for (std::size_t j = 0; j < n; ++j) {
            acc += weights[j];
            if (u < acc) {
                partner = j;
                break;
            }
        }
        draw.partner = partner;
        draw.k_identity = weights[partner];
        draw.d_identity = total;
        draw.diff = std::abs(fz - static_cast<Real>(dataset.label(partner)));

        if (use_subsample) {
            // without-replacement uniform subsample, shared across the net
            draw.subsample.resize(mode.subsample);
            for (std::size_t t = 0; t < mode.subsample; ++t) {
                const std::size_t r = t + sub_rng.next_below(n - t);
                std::swap(pick_buffer[t], pick_buffer[r]);
                draw.subsample[t] = pick_buffer[t];
            }
        }
    }

    const std::vector<DiagonalTransform> net = epsilon_net(d, epsilon);
    std::vector<Real> losses(net.size(), 0.0);
    std::vector<Real> max_summands(net.size(), 0.0);

    auto eval_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) {
            const std::vector<Real> eig_sq = squared(net[a].eigenvalues);
            Real sum = 0.0;
            Real worst = 0.0;
            for (const PairDraw& draw : draws) {
                if (draw.diff == 0.0) continue;
                Real k_a = 0.0;
                {
                    Real sq = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        const Real t = draw.z[k] - dataset.points().coord(k, draw.partner);
                        sq += eig_sq[k] * t * t;
                    }
                    k_a = 1.0 / (1.0 + sq);
                }
                Real denom = 0.0;
                if (use_subsample) {
                    for (const std::size_t j : draw.subsample) {
                        Real sq = 0.0;
                        for (std::size_t k = 0; k < d; ++k) {
                            const Real t = draw.z[k] - dataset.points().coord(k, j);
                            sq += eig_sq[k] * t * t;
                        }
                        denom += 1.0 / (1.0 + sq);
                    }
                    denom *= static_cast<Real>(n) / static_cast<Real>(mode.subsample);
                } else {
                    denom = kernels::active().kernel_sum(dataset.points().dim_begin(0), n, d,
                                                         eig_sq.data(), draw.z.data());
                }
                const Real p_hat = k_a / denom;
                const Real p_id = draw.k_identity / draw.d_identity;
                const Real summand = draw.diff * p_hat / p_id;
                sum += summand;
                worst = std::max(worst, summand);
            }
            losses[a] = sum / static_cast<Real>(m_pairs);
            max_summands[a] = worst;
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), net.size());
    if (workers <= 1 || net.size() < 4) {
        eval_range(0, net.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (net.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(net.size(), begin + chunk);
            if (begin < end) pool.emplace_back(eval_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    NwEstimate out;
    std::size_t best = 0;
    for (std::size_t a = 1; a < net.size(); ++a)
        if (losses[a] < losses[best]) best = a;
    out.value = losses[best];
    out.argmin = net[best];
    out.net_size = net.size();
    out.n_labels = m_pairs + (dataset.labels_fetched() - labels_before);
    out.seed = seed;
    out.kde_mode = mode.name();
    out.max_summand = *std::max_element(max_summands.begin(), max_summands.end());
    return out;
}

NwDataset make_nw_dataset(const SyntheticDistribution& dist, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyDataset("dataset size must be positive");
    const Rng root(seed);
    Rng draw = root.child("nw-dataset");
    SoaPoints points(dist.dims, n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = dist.sample_x(draw);
        for (std::size_t k = 0; k < dist.dims; ++k) points.coord(k, i) = x[k];
    }
    const Rng labels_root = root.child("nw-labels");
    NwLabelSource source = [dist, labels_root](std::size_t index, std::span<const Real> x) {
        Rng r = labels_root.child_index(index);
        const Real y = dist.label(x, r);
        if (y != 0.0 && y != 1.0)
            throw PreconditionViolated("NW dataset labels must be 0 or 1");
        return static_cast<int>(y);
    };
    return NwDataset(std::move(points), std::move(source));
}

NwEvalSet make_nw_eval_set(const SyntheticDistribution& dist, std::size_t n, std::uint64_t seed) {
    NwEvalSet eval;
    Rng rng = Rng(seed).child("nw-eval");
    eval.points.reserve(n);
    eval.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [x, y] = sample_pair(dist, rng);
        if (y != 0.0 && y != 1.0)
            throw PreconditionViolated("NW eval labels must be 0 or 1");
        eval.points.push_back(std::move(x));
        eval.labels.push_back(static_cast<int>(y));
    }
    return eval;
}

KernelStability check_kernel_stability(const SoaPoints& points, const DiagonalTransform& a1,
                                       const DiagonalTransform& a2, std::span<const Real> point,
                                       std::span<const Real> query) {
    if (points.empty()) throw EmptyDataset("check_kernel_stability needs points");
    check_transform(a1, points.dims());
    check_transform(a2, points.dims());
    Real deviation = 1.0;
    for (std::size_t k = 0; k < points.dims(); ++k) {
        const Real r = a1.eigenvalues[k] / a2.eigenvalues[k];
        deviation = std::max(deviation, std::max(r, 1.0 / r));
    }
    const std::vector<Real> sq1 = squared(a1.eigenvalues);
    const std::vector<Real> sq2 = squared(a2.eigenvalues);
    const auto& sum_fn = kernels::active().kernel_sum;
    const Real p1 = nw_kernel(a1, point, query) /
                    sum_fn(points.dim_begin(0), points.size(), points.dims(), sq1.data(),
                           query.data());
    const Real p2 = nw_kernel(a2, point, query) /
                    sum_fn(points.dim_begin(0), points.size(), points.dims(), sq2.data(),
                           query.data());
    KernelStability out;
    out.ratio = p1 / p2;
    out.bound = std::pow(deviation, 4.0);
    return out;
}

NetSufficiency check_net_sufficiency(const NwDataset& dataset, const NwEvalSet& eval,
                                     Real epsilon) {
    if (dataset.size() == 0) throw EmptyDataset("check_net_sufficiency needs a dataset");
    const std::size_t d = dataset.dims();

    const std::vector<DiagonalTransform> coarse = epsilon_net(d, epsilon);
    // refine with the coarse grid folded in so the fine minimum can only improve
    std::vector<Real> fine_grid = eigenvalue_grid(epsilon / 4.0);
    for (Real v : eigenvalue_grid(epsilon)) fine_grid.push_back(v);
    std::sort(fine_grid.begin(), fine_grid.end());
    fine_grid.erase(std::unique(fine_grid.begin(), fine_grid.end(),
                                [](Real x, Real y) { return std::abs(x - y) < 1e-12; }),
                    fine_grid.end());
    std::vector<DiagonalTransform> fine;
    std::vector<std::size_t> odo(d, 0);
    while (true) {
        DiagonalTransform a;
        a.eigenvalues.resize(d);
        for (std::size_t k = 0; k < d; ++k) a.eigenvalues[k] = fine_grid[odo[k]];
        fine.push_back(std::move(a));
        std::size_t k = 0;
        while (k < d && ++odo[k] == fine_grid.size()) odo[k++] = 0;
        if (k == d) break;
    }

    auto net_min = [&](const std::vector<DiagonalTransform>& net) {
        Real best = kInf;
        for (const auto& a : net) best = std::min(best, exact_nw_loss(a, dataset, eval));
        return best;
    };
    NetSufficiency out;
    out.coarse_min = net_min(coarse);
    out.fine_min = net_min(fine);
    out.gap = out.coarse_min - out.fine_min;
    return out;
}

}  // namespace loclearn
