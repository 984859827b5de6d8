#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "meerts/model_core.hpp"

namespace meerts {

/// M(lambda, a1, a2, mu1, mu2): N(a1, mu1) with probability lambda, else N(a2, mu2).
/// mu1 and mu2 are variances.
struct MixedGaussian {
    double lambda = 1.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
};

/**
 * S(a3, b, gamma, theta), defined through its characteristic function
 *
 *   psi(t) = exp{ j theta t - gamma |t|^a3 [1 + j b sgn(t) S(t, a3)] }
 *
 * with S(t, a3) = tan(a3 pi / 2) for a3 != 1 and (2/pi) log|t| for a3 = 1.
 */
struct AlphaStable {
    double a3 = 2.0;
    double b = 0.0;
    double gamma = 1.0;
    double theta = 0.0;
};

struct Rayleigh {
    double sigma = 1.0;
};

struct Gaussian {
    double mean = 0.0;
    double variance = 1.0;
};

struct NoiseSpec;

/// Probabilistic mixture: pick a component by weight, then sample it.
struct Mixture {
    std::vector<double> weights;
    std::vector<NoiseSpec> components;
};

struct NoiseSpec {
    std::variant<MixedGaussian, AlphaStable, Rayleigh, Gaussian, Mixture> law;
};

/// Throws DomainError when the parameters violate the family's invariants.
void validate(const NoiseSpec& spec);

/// Compact human-readable form, e.g. "M(0.9,0,0,0.01,25)".
std::string describe(const NoiseSpec& spec);

/**
 * Reproducible random stream keyed by (seed, stream id).
 *
 * The engine is mt19937_64 seeded through seed_seq, both of which are fully
 * specified by the standard. Uniform and normal variates are derived here
 * rather than through the standard distributions, whose algorithms are
 * implementation-defined.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Restarts the sequence from the beginning.
    void reset();

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double standard_normal();
    double standard_exponential();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

double sample(const NoiseSpec& spec, RngStream& rng);

/// dim i.i.d. draws of the same law.
Vector sample_vector(const NoiseSpec& spec, Index dim, RngStream& rng);

/**
 * Vector-valued noise: independent per-component laws, optionally shaped by a
 * fixed matrix (sample = shaping * draws). A single component is broadcast to
 * every dimension.
 */
struct VectorNoise {
    std::vector<NoiseSpec> components;
    Matrix shaping;

    Vector sample(Index dim, RngStream& rng) const;
    void validate(Index dim) const;
};

}  // namespace meerts
