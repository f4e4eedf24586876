#pragma once

#include <stdexcept>
#include <string>

namespace afaf {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// sparse-net-core
struct InputShapeError : Error { using Error::Error; };
struct NumericStateError : Error { using Error::Error; };
struct LabelDomainError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };

// allocation
struct EmptyDatasetError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct ConstraintError : Error { using Error::Error; };

// trainer
struct StalenessError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };

// data
struct FormatError : Error { using Error::Error; };
struct LengthError : Error { using Error::Error; };
struct DependencyError : Error { using Error::Error; };

// cli / reporting
struct ConfigError : Error { using Error::Error; };
struct ArtifactError : Error { using Error::Error; };
struct GroupingError : Error { using Error::Error; };

}  // namespace afaf
