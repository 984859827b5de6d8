#include "meerts/noise_models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace meerts {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Chambers-Mallows-Stuck. The target characteristic function carries
// "+ j b" where the usual S1 form has "- j beta" for a3 != 1, and the same
// sign for a3 = 1, so beta flips only on the first branch.
double sample_alpha_stable(const AlphaStable& s, RngStream& rng) {
    const double v = kPi * (rng.uniform_open() - 0.5);
    const double w = rng.standard_exponential();
    const double a = s.a3;
    if (std::abs(a - 1.0) > 1e-12) {
        const double beta = -s.b;
        const double t = beta * std::tan(0.5 * kPi * a);
        const double B = std::atan(t) / a;
        const double S = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
        const double x = S * std::sin(a * (v + B)) / std::pow(std::cos(v), 1.0 / a) *
                         std::pow(std::cos(v - a * (v + B)) / w, (1.0 - a) / a);
        return std::pow(s.gamma, 1.0 / a) * x + s.theta;
    }
    const double beta = s.b;
    const double half_pi = 0.5 * kPi;
    const double x = (2.0 / kPi) * ((half_pi + beta * v) * std::tan(v) -
                                    beta * std::log(half_pi * w * std::cos(v) / (half_pi + beta * v)));
    const double c = s.gamma;
    return c * x + (2.0 / kPi) * beta * c * std::log(c) + s.theta;
}

}  // namespace

void validate(const NoiseSpec& spec) {
    std::visit(overloaded{
                   [](const MixedGaussian& s) {
                       if (!(s.lambda >= 0.0 && s.lambda <= 1.0))
                           throw DomainError("mixed-gaussian: lambda must lie in [0, 1]");
                       if (!(s.mu1 >= 0.0) || !(s.mu2 >= 0.0))
                           throw DomainError("mixed-gaussian: mu1 and mu2 must be >= 0");
                   },
                   [](const AlphaStable& s) {
                       if (!(s.a3 > 0.0 && s.a3 <= 2.0))
                           throw DomainError("alpha-stable: a3 must lie in (0, 2]");
                       if (!(s.b >= -1.0 && s.b <= 1.0))
                           throw DomainError("alpha-stable: b must lie in [-1, 1]");
                       if (!(s.gamma > 0.0)) throw DomainError("alpha-stable: gamma must be > 0");
                   },
                   [](const Rayleigh& s) {
                       if (!(s.sigma > 0.0)) throw DomainError("rayleigh: sigma must be > 0");
                   },
                   [](const Gaussian& s) {
                       if (!(s.variance >= 0.0))
                           throw DomainError("gaussian: variance must be >= 0");
                   },
                   [](const Mixture& s) {
                       if (s.weights.empty() || s.weights.size() != s.components.size())
                           throw DomainError("mixture: need one weight per component");
                       double total = 0.0;
                       for (double w : s.weights) {
                           if (!(w >= 0.0)) throw DomainError("mixture: weights must be >= 0");
                           total += w;
                       }
                       if (std::abs(total - 1.0) > 1e-12)
                           throw DomainError("mixture: weights must sum to 1");
                       for (const auto& c : s.components) validate(c);
                   },
               },
               spec.law);
}

std::string describe(const NoiseSpec& spec) {
    std::ostringstream os;
    os.precision(6);
    std::visit(overloaded{
                   [&](const MixedGaussian& s) {
                       os << "M(" << s.lambda << "," << s.a1 << "," << s.a2 << "," << s.mu1 << ","
                          << s.mu2 << ")";
                   },
                   [&](const AlphaStable& s) {
                       os << "S(" << s.a3 << "," << s.b << "," << s.gamma << "," << s.theta << ")";
                   },
                   [&](const Rayleigh& s) { os << "R(" << s.sigma << ")"; },
                   [&](const Gaussian& s) { os << "N(" << s.mean << "," << s.variance << ")"; },
                   [&](const Mixture& s) {
                       for (std::size_t i = 0; i < s.components.size(); ++i) {
                           if (i) os << " + ";
                           os << s.weights[i] << "*" << describe(s.components[i]);
                       }
                   },
               },
               spec.law);
    return os.str();
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    reset();
}

void RngStream::reset() {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream_),
                      static_cast<std::uint32_t>(stream_ >> 32), 0x6d656572u};
    engine_.seed(seq);
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::standard_normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double RngStream::standard_exponential() { return -std::log(uniform_open()); }

double sample(const NoiseSpec& spec, RngStream& rng) {
    return std::visit(
        overloaded{
            [&](const MixedGaussian& s) {
                const bool first = rng.uniform() < s.lambda;
                const double z = rng.standard_normal();
                return first ? s.a1 + std::sqrt(s.mu1) * z : s.a2 + std::sqrt(s.mu2) * z;
            },
            [&](const AlphaStable& s) { return sample_alpha_stable(s, rng); },
            [&](const Rayleigh& s) { return s.sigma * std::sqrt(-2.0 * std::log(rng.uniform_open())); },
            [&](const Gaussian& s) { return s.mean + std::sqrt(s.variance) * rng.standard_normal(); },
            [&](const Mixture& s) {
                const double u = rng.uniform();
                double acc = 0.0;
                std::size_t pick = s.components.size() - 1;
                for (std::size_t i = 0; i < s.weights.size(); ++i) {
                    acc += s.weights[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
                return sample(s.components[pick], rng);
            },
        },
        spec.law);
}

Vector sample_vector(const NoiseSpec& spec, Index dim, RngStream& rng) {
    if (dim <= 0) throw DomainError("sample_vector: dim must be positive");
    Vector out(dim);
    for (Index i = 0; i < dim; ++i) out[i] = sample(spec, rng);
    return out;
}

void VectorNoise::validate(Index dim) const {
    if (components.empty()) throw DomainError("noise: at least one component law is required");
    if (components.size() != 1 && static_cast<Index>(components.size()) != dim)
        throw DomainError("noise: expected 1 or " + std::to_string(dim) + " component laws, got " +
                          std::to_string(components.size()));
    for (const auto& c : components) meerts::validate(c);
    if (shaping.size() != 0 && (shaping.rows() != dim || shaping.cols() != dim))
        throw DomainError("noise: shaping matrix must be " + std::to_string(dim) + "x" +
                          std::to_string(dim));
}

Vector VectorNoise::sample(Index dim, RngStream& rng) const {
    Vector out(dim);
    for (Index i = 0; i < dim; ++i)
        out[i] = meerts::sample(components.size() == 1 ? components[0] : components[i], rng);
    if (shaping.size() != 0) return shaping * out;
    return out;
}

}  // namespace meerts
