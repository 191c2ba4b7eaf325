#pragma once

// Impulse detection on digitized audio. The envelope |f + iH(f)| is convolved
// with a weighted step kernel; local maxima of the response above a threshold
// are pulse arrivals.

#include <span>
#include <vector>

namespace gunloc {

/// Samples normalized so 1.0 is ADC full scale (93 dB SPL).
struct AudioSegment {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz
    double start_time = 0.0;   // epoch of samples[0], seconds

    double duration() const { return sample_rate > 0 ? samples.size() / sample_rate : 0.0; }
};

struct DetectedPulse {
    double arrival_time = 0.0;         // seconds, rounded to the millisecond
    double score = 0.0;                // response x(t) at the local maximum
    double peak_amplitude_dbspl = 0.0; // over the 250 ms following arrival
};

inline constexpr double kDefaultTau = 0.050;            // seconds
inline constexpr double kDefaultDetectThreshold = 2e-3; // response units (full scale = 1)
inline constexpr std::size_t kEnvelopeBlock = 2048;
inline constexpr double kPeakWindow = 0.250;            // seconds

/// Magnitude of the analytic signal, computed on 2048-sample Hann-windowed
/// blocks with 50% overlap and overlap-add reconstruction. The signal is
/// edge-extended by replication at both ends.
std::vector<double> analytic_envelope(const AudioSegment& seg);
std::vector<double> analytic_envelope(std::span<const double> samples);

/// Taps of g(t) on (-tau, tau]: tau*fs ramp taps rising toward 1 followed by
/// tau*fs taps of -1/2. Taps sit at cell centres so the kernel sums to zero.
std::vector<double> step_kernel(double tau, double sample_rate);

/// x[i] = (1/N) sum_j env[i - m_j] g_j, N = kernel size, where m_j is tap j's
/// sample offset and offset 0 is the last ramp tap. Edges are extended by
/// replicating the first/last envelope value, so a constant envelope maps to 0.
std::vector<double> pulse_response(std::span<const double> envelope, std::span<const double> kernel);

/// Local maxima (strict over +-tau/2) of the response above threshold; maxima
/// closer than tau are merged keeping the higher score.
std::vector<DetectedPulse> detect_pulses(const AudioSegment& seg, double tau = kDefaultTau,
                                         double threshold = kDefaultDetectThreshold);

/// 93 + 20 log10(amplitude).
double amplitude_to_dbspl(double normalized_amplitude);

}  // namespace gunloc
