#pragma once

#include <stdexcept>
#include <string>

namespace skelrob {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& msg) {
    throw Error(ErrorKind::Usage, msg);
}
[[noreturn]] inline void data_error(const std::string& msg) {
    throw Error(ErrorKind::Data, msg);
}
[[noreturn]] inline void numeric_error(const std::string& msg) {
    throw Error(ErrorKind::Numeric, msg);
}

} // namespace skelrob
