#pragma once

#include <stdexcept>
#include <string>

namespace branchlab {

// Library-wide exception type. Messages start with a stable machine-readable
// tag ("reducible matrix", "overflow", ...) followed by context.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace branchlab
