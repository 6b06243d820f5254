#ifndef HESSKRON_ERRORS_HPP
#define HESSKRON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hesskron {

// Error taxonomy. Every failure mode raised by the library derives from
// std::runtime_error so callers can catch broadly, while the concrete type
// tells them what went wrong.

struct dimension_error : std::runtime_error {
    explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct training_error : std::runtime_error {
    explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct degeneracy_error : std::runtime_error {
    explicit degeneracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct optimization_error : std::runtime_error {
    explicit optimization_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace hesskron

#endif
