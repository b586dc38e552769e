#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kpz {

// Base for everything the library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnresolvedKernel : Error { using Error::Error; };
struct KernelTooWide : Error { using Error::Error; };
struct SupportTooWide : Error { using Error::Error; };
struct UnstableStep : Error { using Error::Error; };
struct SingularAlpha : Error { using Error::Error; };
struct NonPositiveField : Error { using Error::Error; };
struct OverlappingSupports : Error { using Error::Error; };
struct EpsilonTooLarge : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// field names the offending config key, e.g. "kernel.epsilon"
struct ConfigError : Error {
    std::string field;
    ConfigError(std::string f, const std::string& what)
        : Error(f + ": " + what), field(std::move(f)) {}
};

struct BlowUp : Error {
    std::int64_t trajectory = -1;
    double time = 0.0;
    BlowUp(const std::string& what, double t, std::int64_t traj = -1)
        : Error(what), trajectory(traj), time(t) {}
};

}  // namespace kpz
