#pragma once

#include <stdexcept>
#include <string>

namespace splatalign {

struct invalid_parameter_error : std::invalid_argument {
    explicit invalid_parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

struct numeric_overflow_error : std::runtime_error {
    explicit numeric_overflow_error(const std::string& what) : std::runtime_error(what) {}
};

struct oracle_unavailable_error : std::runtime_error {
    explicit oracle_unavailable_error(const std::string& what) : std::runtime_error(what) {}
};

struct ingestion_error : std::runtime_error {
    explicit ingestion_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splatalign
