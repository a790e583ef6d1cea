#pragma once

#include <stdexcept>
#include <string>

namespace switchboard {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class EmptyQuery : public Error {
public:
    EmptyQuery() : Error("query is empty") {}
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace switchboard
