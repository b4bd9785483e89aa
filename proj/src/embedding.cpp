#include "recodmd/embedding.hpp"

#include <iomanip>
#include <ostream>

#include "recodmd/error.hpp"

namespace recodmd {

HankelMatrix build_hankel(const std::vector<Vector>& series, Index embed_dim) {
    const auto m = static_cast<Index>(series.size());
    if (embed_dim < 1 || embed_dim > m) {
        throw Error(ErrorKind::InvalidEmbedding, "embedding dimension " + std::to_string(embed_dim) +
                                                     " invalid for a series of length " +
                                                     std::to_string(m));
    }
    const Index block = series.front().size();
    for (const auto& v : series) {
        if (v.size() != block) {
            throw Error(ErrorKind::InvalidShape, "series blocks have unequal lengths");
        }
    }
    HankelMatrix h;
    h.source_len = m;
    h.embed_dim = embed_dim;
    h.block_size = block;
    h.data.resize(embed_dim * block, m - embed_dim + 1);
    for (Index j = 0; j < h.data.cols(); ++j) {
        for (Index i = 0; i < embed_dim; ++i) {
            h.data.block(i * block, j, block, 1) = series[static_cast<std::size_t>(i + j)];
        }
    }
    require_finite(h.data, "Hankel source series");
    return h;
}

HankelMatrix build_hankel(std::span<const double> series, Index embed_dim) {
    std::vector<Vector> blocks;
    blocks.reserve(series.size());
    for (double v : series) blocks.push_back(Vector::Constant(1, v));
    if (blocks.empty()) {
        throw Error(ErrorKind::InvalidEmbedding, "empty series");
    }
    return build_hankel(blocks, embed_dim);
}

SingularSpectrum hankel_spectrum(const HankelMatrix& h, double energy_threshold) {
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "energy threshold must lie in (0, 1]");
    }
    SingularSpectrum out;
    out.values = svd(h.data).s;
    if (out.values.size() == 0) return out;

    out.normalized = out.values(0) > 0.0 ? Vector(out.values / out.values(0))
                                         : Vector(Vector::Zero(out.values.size()));
    if (out.values(0) > 0.0) out.normalized(0) = 1.0;

    // Running sums in one pass so the final partial sum equals the total exactly.
    Vector cumulative(out.values.size());
    double acc = 0.0;
    for (Index i = 0; i < out.values.size(); ++i) {
        acc += out.values(i) * out.values(i);
        cumulative(i) = acc;
    }
    const double total = acc;
    out.dominant_count = out.values.size();
    for (Index i = 0; i < out.values.size(); ++i) {
        if (cumulative(i) >= energy_threshold * total) {
            out.dominant_count = i + 1;
            break;
        }
    }
    return out;
}

void write_spectrum(std::ostream& os, const SingularSpectrum& spectrum) {
    os << "# recodmd-spectrum v1\n";
    os << "# dominant_count " << spectrum.dominant_count << '\n';
    os << "# index normalized_singular_value\n";
    os << std::setprecision(17);
    for (Index i = 0; i < spectrum.normalized.size(); ++i) {
        os << (i + 1) << ' ' << spectrum.normalized(i) << '\n';
    }
}

Vector stack_blocks(const std::vector<Vector>& series, std::size_t first, std::size_t count) {
    if (count == 0 || first + count > series.size()) {
        throw Error(ErrorKind::InvalidInput, "stack range out of bounds");
    }
    const Index block = series[first].size();
    Vector out(block * static_cast<Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        if (series[first + i].size() != block) {
            throw Error(ErrorKind::InvalidShape, "series blocks have unequal lengths");
        }
        out.segment(static_cast<Index>(i) * block, block) = series[first + i];
    }
    return out;
}

SnapshotSet embed_snapshots(const std::vector<Vector>& states, const std::vector<Vector>& controls,
                            Index embed_dim) {
    const auto m = static_cast<Index>(states.size());
    if (!controls.empty() && controls.size() != states.size()) {
        throw Error(ErrorKind::InvalidInput, "states (" + std::to_string(states.size()) +
                                                 ") and controls (" +
                                                 std::to_string(controls.size()) +
                                                 ") differ in length");
    }
    if (embed_dim < 1) {
        throw Error(ErrorKind::InvalidEmbedding, "embedding dimension must be >= 1");
    }
    if (m < embed_dim + 1) {
        throw Error(ErrorKind::InsufficientData,
                    "embedding dimension " + std::to_string(embed_dim) + " needs at least " +
                        std::to_string(embed_dim + 1) + " snapshots, got " + std::to_string(m));
    }
    const Index cols = m - embed_dim;
    const auto n = static_cast<std::size_t>(embed_dim);

    SnapshotSet out;
    const Index rows = states.front().size() * embed_dim;
    out.x.resize(rows, cols);
    out.x_prime.resize(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        const auto js = static_cast<std::size_t>(j);
        out.x.col(j) = stack_blocks(states, js, n);
        out.x_prime.col(j) = stack_blocks(states, js + 1, n);
    }
    if (!controls.empty()) {
        Matrix u(controls.front().size() * embed_dim, cols);
        for (Index j = 0; j < cols; ++j) {
            u.col(j) = stack_blocks(controls, static_cast<std::size_t>(j), n);
        }
        out.control = std::move(u);
    }
    return out;
}

std::optional<std::string> takens_warning(Index embed_dim, Index latent_dim) {
    if (latent_dim < 1 || embed_dim >= 2 * latent_dim + 1) return std::nullopt;
    return "embedding dimension " + std::to_string(embed_dim) + " is below 2*" +
           std::to_string(latent_dim) + "+1 = " + std::to_string(2 * latent_dim + 1) +
           "; delay coordinates may not reconstruct the latent dynamics";
}

}  // namespace recodmd
