#pragma once

#include <stdexcept>
#include <string>

namespace restq {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// spec-model
class MalformedDocument : public Error {
public:
    using Error::Error;
};
class UnsupportedVersion : public Error {
public:
    using Error::Error;
};
class InvalidRef : public Error {
public:
    using Error::Error;
};
class CyclicRef : public InvalidRef {
public:
    using InvalidRef::InvalidRef;
};
class DanglingRef : public InvalidRef {
public:
    using InvalidRef::InvalidRef;
};

// ipd-rules
class UnknownParam : public Error {
public:
    using Error::Error;
};
class Unsatisfiable : public Error {
public:
    using Error::Error;
};

// rl-engine
class EmptyModel : public Error {
public:
    using Error::Error;
};
class UnknownOperation : public Error {
public:
    using Error::Error;
};

// executor
class MissingPathParam : public Error {
public:
    using Error::Error;
};

// lm-backend
class BackendTimeout : public Error {
public:
    using Error::Error;
};
class BackendUnreachable : public Error {
public:
    using Error::Error;
};
class FixtureMiss : public Error {
public:
    using Error::Error;
};

// reporting
class SpecMismatch : public Error {
public:
    using Error::Error;
};

} // namespace restq
