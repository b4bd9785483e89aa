#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recodmd/dmd.hpp"

namespace recodmd {

/// Block Hankel matrix: block i of column j holds series[i + j].
struct HankelMatrix {
    Index source_len = 0;
    Index embed_dim = 0;
    Index block_size = 0;
    Matrix data;  // (embed_dim * block_size) x (source_len - embed_dim + 1)
};

struct SingularSpectrum {
    Vector values;
    Vector normalized;  // values / values[0]
    Index dominant_count = 0;
};

inline constexpr double kDefaultEnergyThreshold = 0.99;

HankelMatrix build_hankel(const std::vector<Vector>& series, Index embed_dim);
HankelMatrix build_hankel(std::span<const double> series, Index embed_dim);

/// dominant_count is the smallest k whose leading squared singular values
/// carry at least `energy_threshold` of the total.
SingularSpectrum hankel_spectrum(const HankelMatrix& h,
                                 double energy_threshold = kDefaultEnergyThreshold);

/// Two-column "index normalized_value" text, one line per singular value.
void write_spectrum(std::ostream& os, const SingularSpectrum& spectrum);

/// Delay-embedded snapshots. Column j of X stacks states[j .. j+N-1], X' is
/// the one-step shift, and the control column stacks controls[j .. j+N-1].
/// An empty `controls` yields a snapshot set without control.
SnapshotSet embed_snapshots(const std::vector<Vector>& states, const std::vector<Vector>& controls,
                            Index embed_dim);

/// Stacks series[first .. first+count-1] into one column.
Vector stack_blocks(const std::vector<Vector>& series, std::size_t first, std::size_t count);

/// Advisory Takens check: returns a warning when embed_dim < 2 * latent_dim + 1.
std::optional<std::string> takens_warning(Index embed_dim, Index latent_dim);

}  // namespace recodmd
