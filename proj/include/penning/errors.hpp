#pragma once

#include <stdexcept>
#include <string>

namespace penning {

// All domain failures derive from Error and carry a stable machine-readable
// code. The CLI prints "error code=<code> msg=<what>" and exits nonzero.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

struct UnstableTrapError : Error {
    UnstableTrapError(const std::string& msg, double max_stable_voltage)
        : Error("UnstableTrap", msg), max_stable_voltage(max_stable_voltage) {}
    double max_stable_voltage;
};

struct UnreachableError : Error {
    explicit UnreachableError(const std::string& msg) : Error("Unreachable", msg) {}
};

struct IonEscapedError : Error {
    IonEscapedError(const std::string& msg, double t, int ion)
        : Error("IonEscaped", msg), time_s(t), ion_index(ion) {}
    double time_s;
    int ion_index;
};

struct OverlapError : Error {
    explicit OverlapError(const std::string& msg) : Error("Overlap", msg) {}
};

struct TooFewPhotonsError : Error {
    explicit TooFewPhotonsError(const std::string& msg) : Error("TooFewPhotons", msg) {}
};

struct NoModulationError : Error {
    explicit NoModulationError(const std::string& msg) : Error("NoModulation", msg) {}
};

struct FitFailedError : Error {
    explicit FitFailedError(const std::string& msg) : Error("FitFailed", msg) {}
};

struct IncompleteSwingError : Error {
    explicit IncompleteSwingError(const std::string& msg) : Error("IncompleteSwing", msg) {}
};

struct PeakNotFoundError : Error {
    explicit PeakNotFoundError(const std::string& msg) : Error("PeakNotFound", msg) {}
};

struct EmptyTrajectoryError : Error {
    explicit EmptyTrajectoryError(const std::string& msg) : Error("EmptyTrajectory", msg) {}
};

struct NoSignalError : Error {
    explicit NoSignalError(const std::string& msg) : Error("NoSignal", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("Config", msg) {}
};

} // namespace penning
