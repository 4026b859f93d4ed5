#pragma once

#include <stdexcept>
#include <string>

namespace aomdpd {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// transfer_model
struct InsufficientLowAmplitudeData : Error { using Error::Error; };
struct NonMonotonicFit : Error { using Error::Error; };
struct NonMonotonicTransfer : Error { using Error::Error; };
struct InsufficientRangeCoverage : Error { using Error::Error; };
struct KindMismatch : Error { using Error::Error; };

// waveform_synth
struct UndersampledSpec : Error { using Error::Error; };
struct ComplexEnvelopeUnsupported : Error { using Error::Error; };

// spectral_analysis
struct UndersampledBeat : Error { using Error::Error; };
struct ResolutionTooCoarse : Error { using Error::Error; };

// gate_fidelity
struct UncalibratedSpectrum : Error { using Error::Error; };
struct InvalidGateTones : Error { using Error::Error; };

// experiment_analysis
struct DegenerateScan : Error { using Error::Error; };
struct UnderdeterminedFit : Error { using Error::Error; };
struct BudgetNotCrossed : Error { using Error::Error; };

// i/o and configuration
struct InputError : Error { using Error::Error; };

}  // namespace aomdpd
