#pragma once

#include <stdexcept>
#include <string>

namespace ssr {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's one-line error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct IndexError : Error {
    explicit IndexError(const std::string& w) : Error("index", w) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& w) : Error("contract", w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error("data", w) {}
};
struct SchemaError : Error {
    explicit SchemaError(const std::string& w) : Error("schema", w) {}
};
struct MetricError : Error {
    explicit MetricError(const std::string& w) : Error("metric", w) {}
};
struct ReportError : Error {
    explicit ReportError(const std::string& w) : Error("report", w) {}
};

}  // namespace ssr
