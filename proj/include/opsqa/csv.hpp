#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace opsqa {

// Error with a file/row locator, thrown by table loaders.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
          file_(file), line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a named column; throws ParseError naming the column if absent.
    std::size_t column(const std::string& name) const;
};

// Reads a comma-separated file with a header row. Handles quoted fields and
// CRLF endings; embedded newlines inside quotes are supported.
CsvTable read_csv(const std::string& path);

std::string path_basename(const std::string& path);

}  // namespace opsqa
