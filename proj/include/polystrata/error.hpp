#pragma once

#include <stdexcept>
#include <string>

namespace polystrata {

// Error taxonomy shared by the whole library.
//   validation: malformed or inconsistent input data
//   resource:   a configured search/size bound was exceeded
//   undecided:  a bounded decision procedure could not certify an answer
//   internal:   broken invariant inside the library itself
enum class ErrorKind { validation, resource, undecided, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& m) { throw Error(ErrorKind::validation, m); }
[[noreturn]] inline void fail_resource(const std::string& m) { throw Error(ErrorKind::resource, m); }
[[noreturn]] inline void fail_undecided(const std::string& m) { throw Error(ErrorKind::undecided, m); }
[[noreturn]] inline void fail_internal(const std::string& m) { throw Error(ErrorKind::internal, m); }

inline void require(bool cond, ErrorKind kind, const std::string& m) {
    if (!cond) throw Error(kind, m);
}

} // namespace polystrata
