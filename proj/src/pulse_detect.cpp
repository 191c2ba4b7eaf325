#include "gunloc/pulse_detect.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <numbers>

#include "gunloc/error.hpp"
#include "gunloc/geo.hpp"

namespace gunloc {

namespace {

// The FFTW planner is not reentrant; execution of a finished plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))), size(n) {
        if (!data) throw std::bad_alloc();
        std::memset(static_cast<void*>(data), 0, sizeof(T) * n);
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    T* data;
    std::size_t size;
};

struct Plan {
    explicit Plan(fftw_plan p) : plan(p) {}
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    void run() const { fftw_execute(plan); }
    fftw_plan plan;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

std::vector<double> analytic_envelope(const AudioSegment& seg) {
    if (!(seg.sample_rate > 0)) throw Error(ErrorKind::InvalidInput, "sample rate must be positive");
    return analytic_envelope(seg.samples);
}

std::vector<double> analytic_envelope(std::span<const double> samples) {
    if (samples.empty()) throw Error(ErrorKind::InvalidInput, "cannot take the envelope of an empty signal");
    constexpr std::size_t B = kEnvelopeBlock;
    constexpr std::size_t H = B / 2;
    const std::size_t n = samples.size();

    std::vector<double> window(B);
    for (std::size_t j = 0; j < B; ++j)
        window[j] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / B);

    FftwBuffer<double> real_in(B);
    FftwBuffer<fftw_complex> spectrum(B / 2 + 1);
    FftwBuffer<fftw_complex> analytic(B);
    std::unique_ptr<Plan> forward, backward;
    {
        std::lock_guard lock(planner_mutex());
        forward = std::make_unique<Plan>(
            fftw_plan_dft_r2c_1d(static_cast<int>(B), real_in.data, spectrum.data, FFTW_ESTIMATE));
        backward = std::make_unique<Plan>(fftw_plan_dft_1d(static_cast<int>(B), analytic.data,
                                                           analytic.data, FFTW_BACKWARD, FFTW_ESTIMATE));
    }

    std::vector<std::complex<double>> acc(n);
    // Blocks start one hop before the signal so every sample is covered by two
    // windows. Samples past either end replicate the edge value, so a constant
    // signal has a constant envelope right up to the ends.
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    for (std::ptrdiff_t start = -static_cast<std::ptrdiff_t>(H); start < static_cast<std::ptrdiff_t>(n);
         start += static_cast<std::ptrdiff_t>(H)) {
        for (std::size_t j = 0; j < B; ++j) {
            const std::ptrdiff_t k = std::clamp<std::ptrdiff_t>(start + static_cast<std::ptrdiff_t>(j), 0, last);
            real_in.data[j] = window[j] * samples[static_cast<std::size_t>(k)];
        }
        forward->run();
        // One-sided spectrum: keep DC and Nyquist, double positive bins, zero the rest.
        for (std::size_t k = 0; k < B; ++k) {
            double scale = 0.0;
            if (k == 0 || k == B / 2) scale = 1.0;
            else if (k < B / 2) scale = 2.0;
            const std::size_t src = std::min(k, B / 2);
            analytic.data[k][0] = scale * spectrum.data[src][0];
            analytic.data[k][1] = scale * spectrum.data[src][1];
        }
        backward->run();
        for (std::size_t j = 0; j < B; ++j) {
            const std::ptrdiff_t k = start + static_cast<std::ptrdiff_t>(j);
            if (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) continue;
            acc[static_cast<std::size_t>(k)] += std::complex<double>(analytic.data[j][0], analytic.data[j][1]) / double(B);
        }
    }

    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(acc[i]);
    return env;
}

std::vector<double> step_kernel(double tau, double sample_rate) {
    if (!(tau > 0) || !std::isfinite(tau)) throw Error(ErrorKind::InvalidInput, "tau must be positive");
    if (!(sample_rate > 0)) throw Error(ErrorKind::InvalidInput, "sample rate must be positive");
    const double half = tau * sample_rate;
    if (half < 2.0 - 1e-9)
        throw Error(ErrorKind::InvalidInput, "tau must span at least two samples");
    const auto m = static_cast<std::size_t>(std::llround(half));
    std::vector<double> taps(2 * m);
    // Ramp tap j is centred at t = -tau + (j + 1/2)/fs, where g = t/tau + 1.
    for (std::size_t j = 0; j < m; ++j) taps[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    for (std::size_t j = m; j < 2 * m; ++j) taps[j] = -0.5;
    return taps;
}

std::vector<double> pulse_response(std::span<const double> envelope, std::span<const double> kernel) {
    const std::size_t n = envelope.size();
    const std::size_t N = kernel.size();
    if (N == 0) throw Error(ErrorKind::InvalidInput, "empty kernel");
    if (n <= N) throw Error(ErrorKind::InvalidInput, "envelope must be longer than the kernel");
    const std::size_t centre = N / 2 - (N >= 2 ? 1 : 0);
    const std::size_t pad_past = N - 1 - centre;

    // Edge-replicated envelope, then full linear convolution via FFT:
    // x[i] = (ext * g)[i + N - 1] / N.
    const std::size_t ext_len = n + N - 1;
    const std::size_t conv_len = ext_len + N - 1;
    const std::size_t fft_len = next_pow2(conv_len);
    const std::size_t bins = fft_len / 2 + 1;

    FftwBuffer<double> a(fft_len), b(fft_len);
    FftwBuffer<fftw_complex> fa(bins), fb(bins);
    for (std::size_t k = 0; k < ext_len; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad_past);
        a.data[k] = envelope[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(src, 0, static_cast<std::ptrdiff_t>(n) - 1))];
    }
    std::copy(kernel.begin(), kernel.end(), b.data);

    std::unique_ptr<Plan> pa, pb, inv;
    {
        std::lock_guard lock(planner_mutex());
        const int len = static_cast<int>(fft_len);
        pa = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(len, a.data, fa.data, FFTW_ESTIMATE));
        pb = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(len, b.data, fb.data, FFTW_ESTIMATE));
        inv = std::make_unique<Plan>(fftw_plan_dft_c2r_1d(len, fa.data, a.data, FFTW_ESTIMATE));
    }
    pa->run();
    pb->run();
    for (std::size_t k = 0; k < bins; ++k) {
        const std::complex<double> p =
            std::complex<double>(fa.data[k][0], fa.data[k][1]) * std::complex<double>(fb.data[k][0], fb.data[k][1]);
        fa.data[k][0] = p.real();
        fa.data[k][1] = p.imag();
    }
    inv->run();

    std::vector<double> x(n);
    const double scale = 1.0 / (static_cast<double>(fft_len) * static_cast<double>(N));
    for (std::size_t i = 0; i < n; ++i) x[i] = a.data[i + N - 1] * scale;
    return x;
}

std::vector<DetectedPulse> detect_pulses(const AudioSegment& seg, double tau, double threshold) {
    if (!(seg.sample_rate > 0)) throw Error(ErrorKind::InvalidInput, "sample rate must be positive");
    if (!(tau > 0)) throw Error(ErrorKind::InvalidInput, "tau must be positive");
    if (seg.duration() < 2.0 * tau) throw Error(ErrorKind::InvalidInput, "segment shorter than 2 tau");
    for (double s : seg.samples)
        if (!std::isfinite(s) || std::abs(s) > std::numbers::sqrt2 + 1e-12)
            throw Error(ErrorKind::InvalidInput, "sample outside the normalized full-scale range");

    const auto env = analytic_envelope(seg.samples);
    const auto kernel = step_kernel(tau, seg.sample_rate);
    if (env.size() <= kernel.size()) throw Error(ErrorKind::InvalidInput, "segment shorter than 2 tau");
    const auto x = pulse_response(env, kernel);
    const std::size_t n = x.size();
    const auto half_window = static_cast<std::size_t>(std::llround(tau * seg.sample_rate / 2.0));

    // Sliding maximum over [i - w, i + w].
    std::vector<double> wmax(n);
    std::deque<std::size_t> dq;
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t hi = std::min(n - 1, i + half_window);
        for (; next <= hi; ++next) {
            while (!dq.empty() && x[dq.back()] <= x[next]) dq.pop_back();
            dq.push_back(next);
        }
        const std::size_t lo = i >= half_window ? i - half_window : 0;
        while (dq.front() < lo) dq.pop_front();
        wmax[i] = x[dq.front()];
    }

    struct Peak {
        std::size_t index;
        double score;
    };
    std::vector<Peak> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > threshold) || x[i] < wmax[i]) continue;
        // Strict against earlier samples so a plateau reports its first sample.
        const std::size_t lo = i >= half_window ? i - half_window : 0;
        bool strict = true;
        for (std::size_t j = lo; j < i && strict; ++j) strict = x[j] < x[i];
        if (!strict) continue;
        const std::size_t merge_span = 2 * half_window;
        if (!peaks.empty() && i - peaks.back().index < merge_span) {
            if (x[i] > peaks.back().score) peaks.back() = {i, x[i]};
            continue;
        }
        peaks.push_back({i, x[i]});
    }

    std::vector<DetectedPulse> out;
    out.reserve(peaks.size());
    const auto peak_span = static_cast<std::size_t>(std::llround(kPeakWindow * seg.sample_rate));
    for (const auto& p : peaks) {
        double peak = 0.0;
        for (std::size_t k = p.index; k < std::min(n, p.index + peak_span); ++k)
            peak = std::max(peak, std::abs(seg.samples[k]));
        DetectedPulse d;
        const double t = seg.start_time + static_cast<double>(p.index) / seg.sample_rate;
        d.arrival_time = std::round(t * 1000.0) / 1000.0;
        d.score = p.score;
        const double db = std::min(amplitude_to_dbspl(std::max(peak, 1e-12)), kMaxAmplitudeDbSpl);
        d.peak_amplitude_dbspl = std::round(db * 100.0) / 100.0;
        out.push_back(d);
    }
    return out;
}

double amplitude_to_dbspl(double normalized_amplitude) {
    if (!(normalized_amplitude > 0))
        throw Error(ErrorKind::DomainError, "amplitude must be positive to convert to dB SPL");
    return kFullScaleDbSpl + 20.0 * std::log10(normalized_amplitude);
}

}  // namespace gunloc
