#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

/// Base class for every recoverable error raised by the library. Catching
/// this at the composition root distinguishes input/validation failures
/// from genuine internal faults.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SENTINEL_DEFINE_ERROR(Name)                                           \
    struct Name : Error {                                                     \
        explicit Name(const std::string& what) : Error(what) {}               \
    }

// timeseries-core
SENTINEL_DEFINE_ERROR(SeriesTooShort);
SENTINEL_DEFINE_ERROR(InvalidWindow);
SENTINEL_DEFINE_ERROR(IndexOutOfRange);

// fleet-aggregator
SENTINEL_DEFINE_ERROR(MixedTimelines);

// metamodel
SENTINEL_DEFINE_ERROR(DanglingPayload);
SENTINEL_DEFINE_ERROR(AntiSymmetryViolation);
SENTINEL_DEFINE_ERROR(LevelViolation);
SENTINEL_DEFINE_ERROR(UnregisteredEvidence);
SENTINEL_DEFINE_ERROR(GoalTooLow);
SENTINEL_DEFINE_ERROR(OutOfScopeNeed);

// injection-sim
SENTINEL_DEFINE_ERROR(InvalidSpec);
SENTINEL_DEFINE_ERROR(ScenarioOutOfRange);

// ingest-cli
SENTINEL_DEFINE_ERROR(MalformedRow);
SENTINEL_DEFINE_ERROR(NonUniformSampling);
SENTINEL_DEFINE_ERROR(EmptyInput);
SENTINEL_DEFINE_ERROR(InvalidConfig);

#undef SENTINEL_DEFINE_ERROR

}  // namespace sentinel
