#include "lowtail/offspring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lowtail/errors.hpp"

namespace lowtail {

namespace {
constexpr double kMassTolerance = 1e-12;
constexpr double kCoeffFloor = 1e-15;

std::string strip_spaces(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}
} // namespace

OffspringDistribution OffspringDistribution::from_pmf(std::vector<double> probs) {
    if (probs.empty())
        throw std::invalid_argument("offspring pmf: empty");
    double sum = 0.0;
    for (double p : probs) {
        if (p < -kCoeffFloor || !std::isfinite(p))
            throw std::invalid_argument("offspring pmf: negative or non-finite mass");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kMassTolerance)
        throw std::invalid_argument("offspring pmf: probabilities must sum to 1");

    while (probs.size() > 1 && probs.back() <= kCoeffFloor) probs.pop_back();
    for (double& p : probs)
        if (p < 0.0) p = 0.0;

    OffspringDistribution d;
    d.probs_ = std::move(probs);
    d.mean_ = 0.0;
    d.nu_ = -1;
    for (std::size_t k = 0; k < d.probs_.size(); ++k) {
        d.mean_ += double(k) * d.probs_[k];
        if (d.nu_ < 0 && d.probs_[k] > 0.0) d.nu_ = int(k);
    }
    if (d.nu_ < 0)
        throw std::invalid_argument("offspring pmf: no mass");
    return d;
}

OffspringDistribution OffspringDistribution::geometric(double a) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("geometric offspring: parameter must be in (0,1)");
    OffspringDistribution d;
    d.geometric_ = true;
    d.geo_a_ = a;
    d.mean_ = 1.0 / (1.0 - a);
    d.nu_ = 1;
    return d;
}

OffspringDistribution OffspringDistribution::parse(std::string_view text) {
    const std::string s = strip_spaces(text);
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("offspring spec: expected 'pmf: ...' or 'geometric: ...'");
    const std::string kind = s.substr(0, colon);
    const std::string body = s.substr(colon + 1);

    if (kind == "geometric") {
        std::size_t used = 0;
        double a = std::stod(body, &used);
        if (used != body.size())
            throw std::invalid_argument("offspring spec: bad geometric parameter '" + body + "'");
        return geometric(a);
    }
    if (kind != "pmf")
        throw std::invalid_argument("offspring spec: unknown kind '" + kind + "'");

    std::vector<double> probs;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto sep = item.find(':');
        if (sep == std::string::npos)
            throw std::invalid_argument("offspring spec: expected k:p entry, got '" + item + "'");
        std::size_t used = 0;
        const long k = std::stol(item.substr(0, sep), &used);
        if (used != sep || k < 0)
            throw std::invalid_argument("offspring spec: bad support point in '" + item + "'");
        const std::string pv = item.substr(sep + 1);
        const double p = std::stod(pv, &used);
        if (used != pv.size())
            throw std::invalid_argument("offspring spec: bad probability in '" + item + "'");
        if (std::size_t(k) >= probs.size()) probs.resize(std::size_t(k) + 1, 0.0);
        probs[std::size_t(k)] += p;
    }
    if (probs.empty())
        throw std::invalid_argument("offspring spec: empty pmf");
    return from_pmf(std::move(probs));
}

std::string OffspringDistribution::to_text() const {
    std::ostringstream os;
    os.precision(17);
    if (geometric_) {
        os << "geometric: " << geo_a_;
        return os.str();
    }
    os << "pmf:";
    bool first = true;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
        if (probs_[k] <= 0.0) continue;
        os << (first ? " " : ", ") << k << ":" << probs_[k];
        first = false;
    }
    return os.str();
}

double OffspringDistribution::geo_param() const {
    if (!geometric_)
        throw std::logic_error("geo_param: not a geometric law");
    return geo_a_;
}

const std::vector<double>& OffspringDistribution::pmf() const {
    if (geometric_)
        throw std::logic_error("pmf: geometric law is parametric");
    return probs_;
}

double OffspringDistribution::prob(std::size_t k) const noexcept {
    if (geometric_) {
        if (k == 0) return 0.0;
        return (1.0 - geo_a_) * std::pow(geo_a_, double(k) - 1.0);
    }
    return k < probs_.size() ? probs_[k] : 0.0;
}

int OffspringDistribution::max_support() const {
    if (geometric_)
        throw std::logic_error("max_support: geometric law has unbounded support");
    return int(probs_.size()) - 1;
}

bool OffspringDistribution::is_point_mass() const noexcept {
    if (geometric_) return false;
    int n_positive = 0;
    for (double p : probs_)
        if (p > 0.0) ++n_positive;
    return n_positive == 1;
}

double OffspringDistribution::pgf(double s) const {
    if (!(s >= 0.0 && s <= 1.0))
        throw std::invalid_argument("pgf: s must be in [0,1]");
    if (geometric_) return (1.0 - geo_a_) * s / (1.0 - geo_a_ * s);
    // Horner from the top coefficient.
    double v = 0.0;
    for (std::size_t k = probs_.size(); k-- > 0;) v = v * s + probs_[k];
    return v;
}

BranchingParams derive_params(const OffspringDistribution& dist) {
    if (dist.p0() > 0.0)
        throw DegenerateDistributionError(
            "derive_params: p0 > 0, prune the distribution first");
    if (dist.is_point_mass())
        throw DegenerateDistributionError(
            "derive_params: point mass offspring, martingale limit is deterministic");
    if (!(dist.mean() > 1.0))
        throw DegenerateDistributionError("derive_params: mean offspring must exceed 1");

    BranchingParams p;
    p.mu = dist.mean();
    p.p1 = dist.p1();
    p.nu = dist.min_support();
    p.p_nu = dist.prob(std::size_t(p.nu));
    if (p.p1 > 0.0) {
        p.regime = Regime::schroeder;
        p.tau = -std::log(p.p1) / std::log(p.mu);
    } else {
        p.regime = Regime::boettcher;
        if (!(double(p.nu) < p.mu))
            throw DegenerateDistributionError(
                "derive_params: nu = mu, deterministic tree (beta = 1 excluded)");
        p.beta = std::log(double(p.nu)) / std::log(p.mu);
        p.beta_ratio = p.beta / (1.0 - p.beta);
    }
    return p;
}

double extinction_probability(const OffspringDistribution& dist) {
    if (!(dist.mean() > 1.0))
        throw DegenerateDistributionError(
            "extinction_probability: mean offspring must exceed 1");
    if (dist.p0() == 0.0) return 0.0;

    double s = 0.0;
    for (int it = 0; it < 1'000'000; ++it) {
        const double next = dist.pgf(s);
        if (std::abs(next - s) <= 1e-13) return next;
        s = next;
    }
    throw NoConvergenceError("extinction_probability: fixed-point iteration cap reached");
}

OffspringDistribution prune(const OffspringDistribution& dist) {
    const double q = extinction_probability(dist);
    if (q == 0.0) return dist;

    // Geometric laws already have p0 = 0, so only the finite case remains.
    // Expand fhat(s) = [f(q + (1-q)s) - q]/(1-q) coefficient-wise:
    //   phat_j = (1-q)^{j-1} * sum_{k>=j} p_k * C(k,j) * q^{k-j},  j >= 1.
    const auto& p = dist.pmf();
    const std::size_t K = p.size() - 1;
    std::vector<double> out(K + 1, 0.0);
    for (std::size_t j = 1; j <= K; ++j) {
        double binom = 1.0; // C(j, j)
        double qpow = 1.0;
        double sum = 0.0;
        for (std::size_t k = j; k <= K; ++k) {
            sum += p[k] * binom * qpow;
            // advance C(k,j) -> C(k+1,j) and q^{k-j} -> q^{k-j+1}
            binom *= double(k + 1) / double(k + 1 - j);
            qpow *= q;
        }
        out[j] = std::pow(1.0 - q, double(j) - 1.0) * sum;
    }

    double total = 0.0;
    for (std::size_t j = 1; j <= K; ++j) {
        if (out[j] < kCoeffFloor) out[j] = 0.0;
        total += out[j];
    }
    for (double& v : out) v /= total;
    return OffspringDistribution::from_pmf(std::move(out));
}

} // namespace lowtail
