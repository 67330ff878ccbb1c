#pragma once

#include <stdexcept>
#include <string>

namespace censrank {

// Error taxonomy shared by every module. Each type maps to a stable `kind`
// string used in the CLI's machine-readable error line.

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Metric is mathematically undefined for the input (e.g. no acceptable pairs).
struct UndefinedMetric : std::domain_error {
    using std::domain_error::domain_error;
};

/// Operation called in the wrong state (e.g. backward without forward).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(const std::string& what, int epoch)
        : std::runtime_error(what), epoch(epoch) {}
    int epoch;
};

struct ExperimentFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const UndefinedMetric*>(&e)) return "undefined_metric";
    if (dynamic_cast<const StateError*>(&e)) return "state_error";
    if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    if (dynamic_cast<const TrainingDiverged*>(&e)) return "training_diverged";
    if (dynamic_cast<const ExperimentFailed*>(&e)) return "experiment_failed";
    return "internal";
}

}  // namespace censrank
