#include "ocd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace ocd {

namespace {

constexpr std::uint32_t kSnapshotMagic = 0x4F434449;  // "OCDI"
constexpr std::uint32_t kSnapshotVersion = 1;

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, const T* data, std::size_t count) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(data);
    out.insert(out.end(), bytes, bytes + count * sizeof(T));
}

template <typename T>
void append_value(std::vector<std::uint8_t>& out, T value) {
    append_raw(out, &value, 1);
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T read() {
        T value;
        read_into(&value, 1);
        return value;
    }

    template <typename T>
    void read_into(T* data, std::size_t count) {
        const std::size_t n = count * sizeof(T);
        if (pos_ + n > bytes_.size()) {
            throw std::runtime_error("snapshot: truncated data");
        }
        std::memcpy(data, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Detector::Detector(DetectorConfig config)
    : cfg_(std::move(config)), p_(cfg_.grid.p()), n_scales_(cfg_.grid.num_signed()) {
    if (cfg_.a < 0.0) {
        throw std::invalid_argument("Detector: a must be non-negative");
    }
    if (!(cfg_.t_diag > 0.0) || !(cfg_.t_off > 0.0)) {
        throw std::invalid_argument("Detector: thresholds must be positive");
    }
    const std::size_t sp = static_cast<std::size_t>(n_scales_) * static_cast<std::size_t>(p_);
    const std::size_t spp = sp * static_cast<std::size_t>(p_);
    t_.assign(sp, 0);
    if (cfg_.variant == Variant::Ocd) {
        asum_.assign(spp, 0.0);
    } else {
        adiag_.assign(sp, 0.0);
        tau_.assign(sp, 0);
        tau_pend_.assign(sp, 0);
        lam_.assign(spp, 0.0);
        lam_pend_.assign(spp, 0.0);
    }
}

void Detector::step_ocd(const double* x, double& smax, double& qmax) {
    const double a2 = cfg_.a * cfg_.a;
    const int p = p_;
    for (int k = 0; k < n_scales_; ++k) {
        const double sb = cfg_.grid.signed_scale(k);
        const double half_b2 = 0.5 * sb * sb;
        const bool off = cfg_.grid.in_off_set(k);
        std::int64_t* trow = t_.data() + idx(k, 0);
        double* mat = asum_.data() + col_offset(k, 0);
        for (int j = 0; j < p; ++j) {
            double* col = mat + static_cast<std::size_t>(j) * p;
            const std::int64_t tn = trow[j] + 1;
            const double dnew = col[j] + x[j];
            const double r = sb * dnew - half_b2 * static_cast<double>(tn);
            if (r <= 0.0) {
                trow[j] = 0;
                std::fill(col, col + p, 0.0);
                continue;
            }
            trow[j] = tn;
            smax = std::max(smax, r);
            if (off) {
                const double teff = static_cast<double>(tn);
                const double cutoff = a2 * teff;
                double acc = 0.0;
                for (int i = 0; i < p; ++i) {
                    const double c = col[i] + x[i];
                    col[i] = c;
                    const double cc = c * c;
                    acc += (cc >= cutoff) ? cc : 0.0;
                }
                const double dd = dnew * dnew;
                if (dd >= cutoff) {
                    acc -= dd;
                }
                qmax = std::max(qmax, acc / teff);
            } else {
                for (int i = 0; i < p; ++i) {
                    col[i] += x[i];
                }
            }
        }
    }
}

void Detector::step_prime(const double* x, double& smax, double& qmax) {
    const double a2 = cfg_.a * cfg_.a;
    const int p = p_;
    for (int k = 0; k < n_scales_; ++k) {
        const double sb = cfg_.grid.signed_scale(k);
        const double half_b2 = 0.5 * sb * sb;
        const bool off = cfg_.grid.in_off_set(k);
        std::int64_t* trow = t_.data() + idx(k, 0);
        std::int64_t* taurow = tau_.data() + idx(k, 0);
        std::int64_t* pendrow = tau_pend_.data() + idx(k, 0);
        double* diag = adiag_.data() + idx(k, 0);
        double* lmat = lam_.data() + col_offset(k, 0);
        double* pmat = lam_pend_.data() + col_offset(k, 0);
        for (int j = 0; j < p; ++j) {
            double* lcol = lmat + static_cast<std::size_t>(j) * p;
            double* pcol = pmat + static_cast<std::size_t>(j) * p;
            const std::int64_t tn = trow[j] + 1;
            const double dnew = diag[j] + x[j];
            const double r = sb * dnew - half_b2 * static_cast<double>(tn);
            if (r <= 0.0) {
                trow[j] = 0;
                taurow[j] = 0;
                pendrow[j] = 0;
                diag[j] = 0.0;
                std::fill(lcol, lcol + p, 0.0);
                std::fill(pcol, pcol + p, 0.0);
                continue;
            }
            trow[j] = tn;
            diag[j] = dnew;
            smax = std::max(smax, r);
            // dyadic tail reduction: on t hitting a power of two the reduced
            // window restarts from the pending accumulator
            const bool pow2 = (tn & (tn - 1)) == 0;
            std::int64_t tau_new;
            if (pow2) {
                tau_new = pendrow[j] + 1;
                pendrow[j] = 0;
            } else {
                tau_new = taurow[j] + 1;
                pendrow[j] += 1;
            }
            taurow[j] = tau_new;
            const double teff = static_cast<double>(tau_new);
            const double cutoff = a2 * teff;
            double acc = 0.0;
            if (pow2) {
                for (int i = 0; i < p; ++i) {
                    const double c = pcol[i] + x[i];
                    lcol[i] = c;
                    pcol[i] = 0.0;
                    const double cc = c * c;
                    acc += (cc >= cutoff) ? cc : 0.0;
                }
            } else {
                for (int i = 0; i < p; ++i) {
                    const double c = lcol[i] + x[i];
                    lcol[i] = c;
                    pcol[i] += x[i];
                    const double cc = c * c;
                    acc += (cc >= cutoff) ? cc : 0.0;
                }
            }
            if (off) {
                const double dd = lcol[j] * lcol[j];
                if (dd >= cutoff) {
                    acc -= dd;
                }
                qmax = std::max(qmax, acc / teff);
            }
        }
    }
}

StepOutcome Detector::step(std::span<const double> x) {
    if (declared_) {
        throw std::logic_error("Detector::step called after declaration");
    }
    if (static_cast<int>(x.size()) != p_) {
        throw std::invalid_argument("Detector::step: observation has length " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(p_));
    }
    ++n_;
    double smax = 0.0;
    double qmax = 0.0;
    if (cfg_.variant == Variant::Ocd) {
        step_ocd(x.data(), smax, qmax);
    } else {
        step_prime(x.data(), smax, qmax);
    }
    last_s_diag_ = smax;
    last_s_off_ = qmax;

    StepOutcome out;
    out.s_diag = smax;
    out.s_off = qmax;
    out.declared = smax >= cfg_.t_diag || qmax >= cfg_.t_off;
    if (out.declared) {
        declared_ = true;
        out.declaration = argmax_q();
    }
    return out;
}

std::int64_t Detector::reduced_tail_length(int k, int j) const {
    if (cfg_.variant != Variant::OcdPrime) {
        throw std::logic_error("reduced_tail_length: only defined for the OcdPrime variant");
    }
    return tau_[idx(k, j)];
}

double Detector::tail_sum_diag(int k, int j) const {
    if (cfg_.variant == Variant::Ocd) {
        return asum_[col_offset(k, j) + static_cast<std::size_t>(j)];
    }
    return adiag_[idx(k, j)];
}

std::span<const double> Detector::tail_sum_column(int k, int j) const {
    if (cfg_.variant != Variant::Ocd) {
        throw std::logic_error("tail_sum_column: OcdPrime keeps only the diagonal of A");
    }
    return {asum_.data() + col_offset(k, j), static_cast<std::size_t>(p_)};
}

std::span<const double> Detector::reduced_sum_column(int k, int j) const {
    if (cfg_.variant != Variant::OcdPrime) {
        throw std::logic_error("reduced_sum_column: only defined for the OcdPrime variant");
    }
    return {lam_.data() + col_offset(k, j), static_cast<std::size_t>(p_)};
}

std::span<const double> Detector::stat_column(int k, int j) const {
    const double* base = (cfg_.variant == Variant::Ocd ? asum_.data() : lam_.data());
    return {base + col_offset(k, j), static_cast<std::size_t>(p_)};
}

std::int64_t Detector::stat_tail(int k, int j) const {
    return cfg_.variant == Variant::Ocd ? t_[idx(k, j)] : tau_[idx(k, j)];
}

double Detector::e_value(int k, int j_prime, int j) const {
    const double teff = static_cast<double>(std::max<std::int64_t>(stat_tail(k, j), 1));
    return stat_column(k, j)[static_cast<std::size_t>(j_prime)] / std::sqrt(teff);
}

double Detector::q_value(int k, int j) const {
    const std::span<const double> col = stat_column(k, j);
    const double teff = static_cast<double>(std::max<std::int64_t>(stat_tail(k, j), 1));
    const double cutoff = cfg_.a * cfg_.a * teff;
    double acc = 0.0;
    for (int i = 0; i < p_; ++i) {
        const double cc = col[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(i)];
        acc += (cc >= cutoff) ? cc : 0.0;
    }
    const double dj = col[static_cast<std::size_t>(j)];
    const double dd = dj * dj;
    if (dd >= cutoff) {
        acc -= dd;
    }
    return acc / teff;
}

Declaration Detector::argmax_q() const {
    Declaration best;
    best.n = n_;
    best.coord = 0;
    best.scale_index = 2;  // smallest positive scale of B
    best.scale = cfg_.grid.signed_scale(2);
    double best_q = -1.0;
    for (int j = 0; j < p_; ++j) {
        for (int k = 2; k < n_scales_; ++k) {
            const double q = q_value(k, j);
            if (q > best_q) {
                best_q = q;
                best.coord = j;
                best.scale_index = k;
                best.scale = cfg_.grid.signed_scale(k);
            }
        }
    }
    return best;
}

std::vector<std::uint8_t> Detector::snapshot() const {
    std::vector<std::uint8_t> out;
    append_value(out, kSnapshotMagic);
    append_value(out, kSnapshotVersion);
    append_value(out, static_cast<std::uint32_t>(p_));
    append_value(out, static_cast<std::uint32_t>(cfg_.variant == Variant::Ocd ? 0 : 1));
    append_value(out, static_cast<std::uint32_t>(n_scales_));
    append_value(out, static_cast<std::uint32_t>(declared_ ? 1 : 0));
    append_value(out, static_cast<std::uint64_t>(n_));
    append_value(out, cfg_.grid.beta());
    append_value(out, cfg_.a);
    append_value(out, cfg_.t_diag);
    append_value(out, cfg_.t_off);
    append_value(out, last_s_diag_);
    append_value(out, last_s_off_);
    append_raw(out, t_.data(), t_.size());
    if (cfg_.variant == Variant::Ocd) {
        append_raw(out, asum_.data(), asum_.size());
    } else {
        append_raw(out, adiag_.data(), adiag_.size());
        append_raw(out, tau_.data(), tau_.size());
        append_raw(out, tau_pend_.data(), tau_pend_.size());
        append_raw(out, lam_.data(), lam_.size());
        append_raw(out, lam_pend_.data(), lam_pend_.size());
    }
    return out;
}

Detector Detector::restore(std::span<const std::uint8_t> bytes) {
    ByteReader reader(bytes);
    if (reader.read<std::uint32_t>() != kSnapshotMagic) {
        throw std::runtime_error("snapshot: bad magic");
    }
    if (reader.read<std::uint32_t>() != kSnapshotVersion) {
        throw std::runtime_error("snapshot: unsupported version");
    }
    const auto p = reader.read<std::uint32_t>();
    const auto variant_code = reader.read<std::uint32_t>();
    const auto scale_count = reader.read<std::uint32_t>();
    const auto flags = reader.read<std::uint32_t>();
    const auto n = reader.read<std::uint64_t>();
    const double beta = reader.read<double>();
    const double a = reader.read<double>();
    const double t_diag = reader.read<double>();
    const double t_off = reader.read<double>();
    const double s_diag = reader.read<double>();
    const double s_off = reader.read<double>();
    if (p < 2 || variant_code > 1) {
        throw std::runtime_error("snapshot: corrupt header");
    }
    DetectorConfig cfg{ScaleGrid(static_cast<int>(p), beta), a, t_diag, t_off,
                       variant_code == 0 ? Variant::Ocd : Variant::OcdPrime};
    if (static_cast<int>(scale_count) != cfg.grid.num_signed()) {
        throw std::runtime_error("snapshot: scale count does not match grid");
    }
    Detector det(std::move(cfg));
    det.n_ = static_cast<std::int64_t>(n);
    det.declared_ = (flags & 1u) != 0;
    det.last_s_diag_ = s_diag;
    det.last_s_off_ = s_off;
    reader.read_into(det.t_.data(), det.t_.size());
    if (det.cfg_.variant == Variant::Ocd) {
        reader.read_into(det.asum_.data(), det.asum_.size());
    } else {
        reader.read_into(det.adiag_.data(), det.adiag_.size());
        reader.read_into(det.tau_.data(), det.tau_.size());
        reader.read_into(det.tau_pend_.data(), det.tau_pend_.size());
        reader.read_into(det.lam_.data(), det.lam_.size());
        reader.read_into(det.lam_pend_.data(), det.lam_pend_.size());
    }
    if (reader.remaining() != 0) {
        throw std::runtime_error("snapshot: trailing bytes");
    }
    return det;
}

std::size_t Detector::state_bytes() const {
    return sizeof(Detector) + t_.capacity() * sizeof(std::int64_t) +
           (asum_.capacity() + adiag_.capacity() + lam_.capacity() + lam_pend_.capacity()) *
               sizeof(double) +
           (tau_.capacity() + tau_pend_.capacity()) * sizeof(std::int64_t);
}

}  // namespace ocd
