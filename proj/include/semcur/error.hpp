#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semcur
{
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Malformed input text; carries the 1-based line number when known.
    class ParseError : public Error
    {
    public:
        ParseError(std::size_t line, const std::string &what)
            : Error("line " + std::to_string(line) + ": " + what), m_line(line)
        {
        }

        std::size_t line() const noexcept { return m_line; }

    private:
        std::size_t m_line;
    };

    class ValidationError : public Error
    {
    public:
        using Error::Error;
    };

    class EmptyInputError : public Error
    {
    public:
        EmptyInputError() : Error("empty input text") {}
    };

    class CalibrationError : public Error
    {
    public:
        using Error::Error;
    };

    /// A depth commit that was refused; the stored reference frame is unchanged.
    class CommitRejected : public Error
    {
    public:
        using Error::Error;
    };
}
