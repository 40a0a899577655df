#pragma once

#include "y2aec/dsp/frame_config.hpp"

namespace y2aec::metrics {

struct ErleOptions {
  double smoothing = 0.99;      // one-pole coefficient on instantaneous powers
  double active_floor_db = -60.0;  // samples below this (re the peak) are skipped
  double cap_db = 80.0;         // guard when the residual is numerically zero
};

/// Echo return loss enhancement: powers of d and the processed residual are
/// smoothed with a one-pole IIR, the dB ratio is averaged over samples where
/// the smoothed echo power is within 60 dB of its peak.
double erle_db(const dsp::Signal& d, const dsp::Signal& d_tilde, const ErleOptions& opt = {});

/// SNR improvement over the whole utterance:
/// 10log10(sum s~^2 / sum n~^2) - 10log10(sum s^2 / sum n^2).
/// Vanishing processed components are clamped at +-cap_db.
double delta_snr_db(const dsp::Signal& s, const dsp::Signal& n, const dsp::Signal& s_tilde,
                    const dsp::Signal& n_tilde, double cap_db = 80.0);

/// Simplified form for the noise-only condition (y = n):
/// 10log10(sum n^2 / sum n~^2), capped like delta_snr_db.
double delta_snr_component_db(const dsp::Signal& n, const dsp::Signal& n_tilde,
                              double cap_db = 80.0);

/// Log-spectral distance between two signals over the analysis frames;
/// 0 dB for identical inputs.
double log_spectral_distance_db(const dsp::Signal& ref, const dsp::Signal& test,
                                const dsp::FrameConfig& frame);

/// Energy ratio of the reference to the residual (test - ref), capped.
double snr_db(const dsp::Signal& ref, const dsp::Signal& test, double cap_db = 80.0);

}  // namespace y2aec::metrics
