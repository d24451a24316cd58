#pragma once

#include <array>
#include <cstdint>

namespace depemp {

/// Roles keep the innovation, coupling, and burn-in draws of one replication
/// on disjoint streams.
enum class StreamRole : std::uint64_t {
    innovations = 1,
    coupling = 2,
    burn_in = 3,
    pilot = 4,
    states = 5,
    inequality = 6,
};

/// Identifies one random stream: (master seed, replication index, role).
/// Distinct tokens give statistically independent streams.
struct SeedToken {
    std::uint64_t master = 0;
    std::uint64_t replication = 0;
    std::uint64_t role = static_cast<std::uint64_t>(StreamRole::innovations);

    [[nodiscard]] SeedToken with_role(StreamRole r) const {
        return {master, replication, static_cast<std::uint64_t>(r)};
    }
    [[nodiscard]] SeedToken with_replication(std::uint64_t rep) const {
        return {master, rep, role};
    }
    /// Derives a child token, e.g. one per lag or per n value of an experiment.
    [[nodiscard]] SeedToken child(std::uint64_t index) const;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 counter-based generator. The key comes from the master seed,
/// the high counter words from (replication, role), the low words count blocks.
class Philox {
public:
    explicit Philox(const SeedToken& token);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    double normal();
    /// Marsaglia-Tsang; shape > 0.
    double gamma(double shape);

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace depemp
