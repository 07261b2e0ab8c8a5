#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "rng.hpp"

#include <cstdint>
#include <memory>
#include <ostream>
#include <sstream>
#include <vector>

namespace hdexp {

// Admissible range for the disk centre.
inline constexpr double kLawAMin = 1.0 / (3.0 * std::numbers::e);
inline constexpr double kLawAMax = 2.0 / (3.0 * std::numbers::e);

enum class SamplingMode { complex_disk, real_interval };

struct ParameterLaw {
    double a = 0.18;
    double r = 0.0;
    SamplingMode mode = SamplingMode::complex_disk;

    static ParameterLaw make(double a, double r, const EngineConfig& cfg = {},
                             SamplingMode mode = SamplingMode::complex_disk) {
        std::ostringstream os;
        if (!(a > kLawAMin && a < kLawAMax)) {
            os << "a = " << a << " outside (1/(3e), 2/(3e))";
            throw DomainError(os.str());
        }
        if (!(r >= 0.0)) throw DomainError("r must be nonnegative");
        // the open disk D(a, r) must sit inside Omega_{b/2}
        double half_b = 0.5 * cfg.b_config;
        if (!(a - r >= kEtaReMin && a + r <= kEtaReMax && r <= half_b)) {
            os << "D(" << a << ", " << r << ") not inside Omega_{b/2} with b = " << cfg.b_config;
            throw DomainError(os.str());
        }
        return {a, r, mode};
    }
};

struct FiberSequence {
    ParameterLaw law;
    std::uint64_t seed = 0;
    std::vector<ExpParameter> etas;

    [[nodiscard]] std::size_t size() const { return etas.size(); }
    [[nodiscard]] bool constant() const { return law.r == 0.0; }

    void write_csv(std::ostream& os) const {
        os.precision(17);
        os << "index,re_eta,im_eta\n";
        for (std::size_t n = 0; n < etas.size(); ++n)
            os << n << ',' << etas[n].eta.real() << ',' << etas[n].eta.imag() << '\n';
    }
};

// eta_n = a + r u_n with u_n drawn from counter n of the seed's stream.
// The u_n depend only on (seed, n), so fibers of different laws built from
// one seed are coupled draw by draw.
inline FiberSequence sample_fiber(const ParameterLaw& law, std::uint64_t seed, std::size_t N,
                                  const EngineConfig& cfg = {}) {
    if (N < 1) throw DomainError("fiber length must be at least 1");
    FiberSequence f{law, seed, {}};
    f.etas.reserve(N);
    CounterRng rng(seed);
    if (law.r == 0.0) {
        ExpParameter p = ExpParameter::make(cplx(law.a, 0.0), cfg);
        f.etas.assign(N, p);
        return f;
    }
    for (std::size_t n = 0; n < N; ++n) {
        cplx u = law.mode == SamplingMode::complex_disk ? rng.unit_disk(n) : cplx(2.0 * rng.uniform(2 * n) - 1.0, 0.0);
        f.etas.push_back(ExpParameter::make(law.a + law.r * u, cfg));
    }
    return f;
}

// One immutable fiber shared by every t of a pressure curve.
inline std::shared_ptr<const FiberSequence> common_random_numbers(const ParameterLaw& law, std::uint64_t seed,
                                                                  std::size_t N, const std::vector<double>& t_values,
                                                                  const EngineConfig& cfg = {}) {
    if (t_values.empty()) throw DomainError("no t values");
    return std::make_shared<const FiberSequence>(sample_fiber(law, seed, N, cfg));
}

}  // namespace hdexp
