#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sortform/permutation.hpp"

namespace sortform {

// SFM1 layout: the four bytes "SFM1", u32 LE rows, u32 LE cols, then
// rows*cols IEEE-754 float32 LE values in row-major order.
inline constexpr char kSfmMagic[4] = {'S', 'F', 'M', '1'};

void write_sfm(std::ostream &out, const Matrix &m);
Matrix read_sfm(std::istream &in);

// Comma separated, one matrix row per line. Blank lines are skipped.
Matrix parse_csv_matrix(const std::string &text);
std::string write_csv_matrix(const Matrix &m);

void save_matrix(const std::filesystem::path &path, const Matrix &m);

// Dispatches on content: SFM1 magic, otherwise CSV.
Matrix load_matrix(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

}  // namespace sortform
