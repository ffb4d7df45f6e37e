#pragma once

#include <stdexcept>
#include <string>

namespace vauth {

// Base of every error raised by the library. Each subclass names one failure
// mode so callers can catch precisely what they can recover from.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VAUTH_DEFINE_ERROR(Name)              \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

// signal_core
VAUTH_DEFINE_ERROR(InvalidSignal);
VAUTH_DEFINE_ERROR(InvalidCutoff);
VAUTH_DEFINE_ERROR(InvalidRate);
VAUTH_DEFINE_ERROR(DegenerateSignal);
VAUTH_DEFINE_ERROR(AlignmentFailed);
VAUTH_DEFINE_ERROR(EnvelopeMismatch);
VAUTH_DEFINE_ERROR(WavFormatError);

// pitch
VAUTH_DEFINE_ERROR(SegmentTooShort);
VAUTH_DEFINE_ERROR(NoPitch);

// segment_analysis
VAUTH_DEFINE_ERROR(NoSurvivingSegments);

// decision
VAUTH_DEFINE_ERROR(DegenerateTrainingSet);
VAUTH_DEFINE_ERROR(ModelFormatError);

// pipeline
VAUTH_DEFINE_ERROR(InputError);
VAUTH_DEFINE_ERROR(ConfigError);

// synth
VAUTH_DEFINE_ERROR(InvalidConfig);

// attack_bench
VAUTH_DEFINE_ERROR(SignalTooShort);
VAUTH_DEFINE_ERROR(BoundInapplicable);

// gateway
VAUTH_DEFINE_ERROR(ConnectError);
VAUTH_DEFINE_ERROR(ProtocolError);

#undef VAUTH_DEFINE_ERROR

}  // namespace vauth
