#pragma once

#include <stdexcept>
#include <string>

namespace tm3 {

// Bad arguments, malformed files, violated preconditions.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Missing files, unreadable images, write failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw ValidationError(msg);
}

}  // namespace tm3
