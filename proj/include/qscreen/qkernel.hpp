#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qscreen/csv.hpp"
#include "qscreen/matrix.hpp"
#include "qscreen/rng.hpp"

namespace qscreen {

/// ZZ feature map with linear entanglement. The phase conventions (2x on
/// single qubits, 2(pi-x)(pi-x') on pairs) are the defaults; both are
/// overridable via the data-map hooks for convention experiments.
struct FeatureMapSpec {
    std::size_t n_qubits = 1;
    std::size_t depth = 2;
    std::function<double(double)> single_phase;          // default 2x
    std::function<double(double, double)> pair_phase;    // default 2(pi-x)(pi-x')
};

enum class GateKind { H, P, CX };

struct Gate {
    GateKind kind = GateKind::H;
    std::uint32_t q0 = 0;     // target qubit (control for CX)
    std::uint32_t q1 = 0;     // CX target; unused otherwise
    double angle = 0.0;       // P phase; unused otherwise
};

inline constexpr std::size_t kMaxQubits = 24;  // 2^24 amplitudes = 256 MiB per state

inline std::vector<Gate> build_feature_map(std::span<const double> x, const FeatureMapSpec& spec) {
    if (spec.n_qubits < 1) throw std::invalid_argument("feature map: n_qubits must be >= 1");
    if (spec.n_qubits > kMaxQubits) throw std::invalid_argument("feature map: n_qubits exceeds 24");
    if (spec.depth < 1) throw std::invalid_argument("feature map: depth must be >= 1");
    if (x.size() != spec.n_qubits)
        throw std::invalid_argument("feature map: angle count does not match n_qubits");
    for (const double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("feature map: non-finite angle");

    constexpr double pi = std::numbers::pi;
    const auto single = [&](double v) { return spec.single_phase ? spec.single_phase(v) : 2.0 * v; };
    const auto pair = [&](double a, double b) {
        return spec.pair_phase ? spec.pair_phase(a, b) : 2.0 * (pi - a) * (pi - b);
    };

    const auto n = static_cast<std::uint32_t>(spec.n_qubits);
    std::vector<Gate> gates;
    gates.reserve(spec.depth * (2 * spec.n_qubits + 3 * (spec.n_qubits - 1)));
    for (std::size_t layer = 0; layer < spec.depth; ++layer) {
        for (std::uint32_t q = 0; q < n; ++q) gates.push_back({GateKind::H, q, 0, 0.0});
        for (std::uint32_t q = 0; q < n; ++q) gates.push_back({GateKind::P, q, 0, single(x[q])});
        for (std::uint32_t j = 0; j + 1 < n; ++j) {
            gates.push_back({GateKind::CX, j, j + 1, 0.0});
            gates.push_back({GateKind::P, j + 1, 0, pair(x[j], x[j + 1])});
            gates.push_back({GateKind::CX, j, j + 1, 0.0});
        }
    }
    return gates;
}

/// Adjoint circuit: reversed order, phase angles negated (H and CX are
/// self-inverse).
inline std::vector<Gate> inverse_gates(std::span<const Gate> gates) {
    std::vector<Gate> inv(gates.rbegin(), gates.rend());
    for (Gate& g : inv)
        if (g.kind == GateKind::P) g.angle = -g.angle;
    return inv;
}

using Amplitudes = std::vector<std::complex<double>>;

/// Dense statevector simulation from |0...0>. Qubit q maps to bit q of the
/// amplitude index.
inline Amplitudes simulate(std::span<const Gate> gates, std::size_t n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw std::invalid_argument("simulate: n_qubits out of range");
    const std::size_t size = std::size_t{1} << n_qubits;
    Amplitudes amp(size);
    amp[0] = 1.0;

    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (const Gate& g : gates) {
        if (g.q0 >= n_qubits || (g.kind == GateKind::CX && g.q1 >= n_qubits))
            throw std::out_of_range("simulate: gate qubit index out of range");
        switch (g.kind) {
            case GateKind::H: {
                const std::size_t m = std::size_t{1} << g.q0;
                for (std::size_t base = 0; base < size; base += 2 * m)
                    for (std::size_t off = 0; off < m; ++off) {
                        const std::size_t i = base + off;
                        const std::complex<double> a = amp[i], b = amp[i + m];
                        amp[i] = (a + b) * inv_sqrt2;
                        amp[i + m] = (a - b) * inv_sqrt2;
                    }
                break;
            }
            case GateKind::P: {
                const std::size_t m = std::size_t{1} << g.q0;
                const std::complex<double> phase = std::polar(1.0, g.angle);
                for (std::size_t base = 0; base < size; base += 2 * m)
                    for (std::size_t off = 0; off < m; ++off) amp[base + off + m] *= phase;
                break;
            }
            case GateKind::CX: {
                if (g.q0 == g.q1) throw std::invalid_argument("simulate: CX control equals target");
                const std::size_t cm = std::size_t{1} << g.q0;
                const std::size_t tm = std::size_t{1} << g.q1;
                for (std::size_t i = 0; i < size; ++i)
                    if ((i & cm) && !(i & tm)) std::swap(amp[i], amp[i | tm]);
                break;
            }
        }
    }
    return amp;
}

inline Amplitudes feature_map_state(std::span<const double> x, const FeatureMapSpec& spec) {
    return simulate(build_feature_map(x, spec), spec.n_qubits);
}

inline double state_overlap(const Amplitudes& a, const Amplitudes& b) {
    std::complex<double> inner = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) inner += std::conj(a[i]) * b[i];
    return std::clamp(std::norm(inner), 0.0, 1.0);
}

/// Fidelity kernel |<phi(x)|phi(x')>|^2 via statevector inner product.
inline double kernel_exact(std::span<const double> x, std::span<const double> xp,
                           const FeatureMapSpec& spec) {
    if (x.size() != xp.size()) throw std::invalid_argument("kernel: dimension mismatch");
    return state_overlap(feature_map_state(x, spec), feature_map_state(xp, spec));
}

/// Inversion-test estimate: run U(x') then U+(x), sample the all-zeros
/// outcome `shots` times from the exact final distribution, return its
/// frequency. Deterministic under seed. Probabilities within 1e-12 of the
/// degenerate endpoints snap to them so identical inputs give exactly 1.
inline double kernel_sampled(std::span<const double> x, std::span<const double> xp,
                             const FeatureMapSpec& spec, std::uint64_t shots, std::uint64_t seed) {
    if (x.size() != xp.size()) throw std::invalid_argument("kernel: dimension mismatch");
    if (shots < 1) throw std::invalid_argument("kernel_sampled: shots must be >= 1");
    std::vector<Gate> circuit = build_feature_map(xp, spec);
    const std::vector<Gate> undo = inverse_gates(build_feature_map(x, spec));
    circuit.insert(circuit.end(), undo.begin(), undo.end());
    const Amplitudes amp = simulate(circuit, spec.n_qubits);
    const double p0 = std::clamp(std::norm(amp[0]), 0.0, 1.0);
    if (p0 > 1.0 - 1e-12) return 1.0;
    if (p0 < 1e-18) return 0.0;
    Rng rng(seed);
    return static_cast<double>(rng.binomial(shots, p0)) / static_cast<double>(shots);
}

enum class KernelMode { Exact, Sampled };

struct KernelMatrix {
    Matrix values;
    KernelMode mode = KernelMode::Exact;
    std::uint64_t shots = 0;
    bool symmetric = false;
    double jitter = 0.0;  // 0 = no PSD repair applied
};

struct GramOptions {
    KernelMode mode = KernelMode::Exact;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    bool psd_repair = false;     // sampled mode only
    unsigned threads = 1;
    std::uint64_t stream_salt = 0;  // separates RNG streams of distinct Grams
};

namespace qk_detail {

// Per-entry seeds make the fill schedule-independent in sampled mode.
inline std::uint64_t entry_seed(const GramOptions& opt, std::size_t r, std::size_t c) {
    return derive_seed(derive_seed(opt.seed, opt.stream_salt, 0xa17), r, c);
}

inline void run_partitioned(std::size_t count, unsigned threads,
                            const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads <= 1 || count < 2) {
        body(0, count);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (std::thread& t : pool) t.join();
}

inline std::vector<Amplitudes> cached_states(const Matrix& rows, const FeatureMapSpec& spec,
                                             unsigned threads) {
    std::vector<Amplitudes> states(rows.rows());
    run_partitioned(rows.rows(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) states[r] = feature_map_state(rows.row(r), spec);
    });
    return states;
}

inline void repair_psd(KernelMatrix& km) {
    const std::size_t n = km.values.rows();
    Eigen::MatrixXd m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = km.values(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    const double lambda_min = solver.eigenvalues().minCoeff();
    if (lambda_min >= 0.0) return;
    km.jitter = -lambda_min + 1e-10;
    for (std::size_t r = 0; r < n; ++r) km.values(r, r) += km.jitter;
}

} // namespace qk_detail

/// Self-Gram: upper triangle computed, mirrored for exact symmetry, diagonal
/// 1 in exact mode. Exact mode caches one statevector per row; in sampled
/// mode each entry draws from its own (seed, row, col)-derived stream.
inline KernelMatrix gram_matrix(const Matrix& a, const FeatureMapSpec& spec,
                                const GramOptions& opt = {}) {
    if (a.cols() != spec.n_qubits) throw std::invalid_argument("gram_matrix: dimension mismatch");
    const std::size_t n = a.rows();
    KernelMatrix km;
    km.mode = opt.mode;
    km.shots = opt.mode == KernelMode::Sampled ? opt.shots : 0;
    km.symmetric = true;
    km.values = Matrix(n, n);

    if (opt.mode == KernelMode::Exact) {
        const std::vector<Amplitudes> states = qk_detail::cached_states(a, spec, opt.threads);
        qk_detail::run_partitioned(n, opt.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r) {
                km.values(r, r) = 1.0;
                for (std::size_t c = r + 1; c < n; ++c)
                    km.values(r, c) = state_overlap(states[r], states[c]);
            }
        });
    } else {
        qk_detail::run_partitioned(n, opt.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r)
                for (std::size_t c = r; c < n; ++c)
                    km.values(r, c) = kernel_sampled(a.row(r), a.row(c), spec, opt.shots,
                                                     qk_detail::entry_seed(opt, r, c));
        });
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < r; ++c) km.values(r, c) = km.values(c, r);

    if (opt.mode == KernelMode::Sampled && opt.psd_repair) qk_detail::repair_psd(km);
    return km;
}

/// Rectangular Gram (rows of a vs rows of b), e.g. test-vs-train kernels.
inline KernelMatrix gram_matrix(const Matrix& a, const Matrix& b, const FeatureMapSpec& spec,
                                const GramOptions& opt = {}) {
    if (a.cols() != spec.n_qubits || b.cols() != spec.n_qubits)
        throw std::invalid_argument("gram_matrix: dimension mismatch");
    KernelMatrix km;
    km.mode = opt.mode;
    km.shots = opt.mode == KernelMode::Sampled ? opt.shots : 0;
    km.symmetric = false;
    km.values = Matrix(a.rows(), b.rows());

    if (opt.mode == KernelMode::Exact) {
        const std::vector<Amplitudes> sa = qk_detail::cached_states(a, spec, opt.threads);
        const std::vector<Amplitudes> sb = qk_detail::cached_states(b, spec, opt.threads);
        qk_detail::run_partitioned(a.rows(), opt.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r)
                for (std::size_t c = 0; c < b.rows(); ++c)
                    km.values(r, c) = state_overlap(sa[r], sb[c]);
        });
    } else {
        qk_detail::run_partitioned(a.rows(), opt.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r)
                for (std::size_t c = 0; c < b.rows(); ++c)
                    km.values(r, c) = kernel_sampled(a.row(r), b.row(c), spec, opt.shots,
                                                     qk_detail::entry_seed(opt, r, c));
        });
    }
    return km;
}

namespace qk_detail {

inline void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void append_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    append_u64(out, bits);
}

inline std::uint64_t read_u64(const std::string& s, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
    return v;
}

inline std::uint32_t read_u32(const std::string& s, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
    return v;
}

} // namespace qk_detail

/// QKM1 binary layout: magic "QKM1", then little-endian u32 rows, u32 cols,
/// u8 mode (0 exact, 1 sampled), u64 shots, f64 entries row-major.
inline void write_qkm(const std::filesystem::path& path, const KernelMatrix& km) {
    std::string out;
    out.reserve(21 + 8 * km.values.rows() * km.values.cols());
    out += "QKM1";
    qk_detail::append_u32(out, static_cast<std::uint32_t>(km.values.rows()));
    qk_detail::append_u32(out, static_cast<std::uint32_t>(km.values.cols()));
    out.push_back(km.mode == KernelMode::Sampled ? '\x01' : '\x00');
    qk_detail::append_u64(out, km.shots);
    for (std::size_t r = 0; r < km.values.rows(); ++r)
        for (std::size_t c = 0; c < km.values.cols(); ++c)
            qk_detail::append_f64(out, km.values(r, c));
    write_file_atomic(path, out);
}

inline KernelMatrix read_qkm(const std::filesystem::path& path) {
    const std::string data = read_text_file(path);
    if (data.size() < 21 || data.compare(0, 4, "QKM1") != 0)
        throw std::runtime_error("not a QKM1 file: '" + path.string() + "'");
    const std::uint32_t rows = qk_detail::read_u32(data, 4);
    const std::uint32_t cols = qk_detail::read_u32(data, 8);
    const unsigned char mode = static_cast<unsigned char>(data[12]);
    if (mode > 1) throw std::runtime_error("QKM1: bad mode byte");
    KernelMatrix km;
    km.mode = mode == 1 ? KernelMode::Sampled : KernelMode::Exact;
    km.shots = qk_detail::read_u64(data, 13);
    const std::size_t need = 21 + std::size_t{8} * rows * cols;
    if (data.size() != need) throw std::runtime_error("QKM1: truncated or oversized payload");
    km.values = Matrix(rows, cols);
    std::size_t at = 21;
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c, at += 8) {
            const std::uint64_t bits = qk_detail::read_u64(data, at);
            double v;
            std::memcpy(&v, &bits, sizeof v);
            km.values(r, c) = v;
        }
    km.symmetric = true;
    if (rows != cols) km.symmetric = false;
    else
        for (std::uint32_t r = 0; r < rows && km.symmetric; ++r)
            for (std::uint32_t c = r + 1; c < cols; ++c)
                if (km.values(r, c) != km.values(c, r)) { km.symmetric = false; break; }
    return km;
}

inline void write_kernel_csv(const std::filesystem::path& path, const KernelMatrix& km) {
    std::string out;
    for (std::size_t r = 0; r < km.values.rows(); ++r) {
        for (std::size_t c = 0; c < km.values.cols(); ++c) {
            if (c) out.push_back(',');
            out += format_double(km.values(r, c));
        }
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

} // namespace qscreen
