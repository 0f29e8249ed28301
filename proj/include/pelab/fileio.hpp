#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pelab {

// Whole-file helpers. All throw IoError with the path on failure.
std::string read_text_file(const std::filesystem::path& path);
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_binary_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(const std::string& text);

// Whitespace tokenization.
std::vector<std::string> split_ws(const std::string& text);

std::string to_lower(std::string s);

}  // namespace pelab
