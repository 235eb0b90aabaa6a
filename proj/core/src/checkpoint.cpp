#include "sortform/nn/checkpoint.hpp"

#include <map>
#include <sstream>

#include "sortform/errors.hpp"
#include "sortform/matrix_io.hpp"

namespace sortform::nn {
namespace {

std::string tensor_file(const std::string &name) { return name + ".sfm"; }

int to_int(const std::string &value, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw ParseError(line, "expected an integer, got '" + value + "'");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path &dir, const ToyDiarizerParams &params) {
  params.validate();
  std::filesystem::create_directories(dir);
  const auto &s = params.shape;
  std::ostringstream manifest;
  manifest << "format sortform-toy-1\n"
           << "input_dim " << s.input_dim << "\n"
           << "model_dim " << s.model_dim << "\n"
           << "heads " << s.heads << "\n"
           << "layers " << s.layers << "\n"
           << "ff_dim " << s.ff_dim << "\n"
           << "num_speakers " << s.num_speakers << "\n"
           << "positional_mode " << to_string(s.positional_mode) << "\n"
           << "max_frames " << s.max_frames << "\n";
  params.for_each_tensor([&](const std::string &name, const Matrix &m) {
    manifest << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
    save_matrix(dir / tensor_file(name), m);
  });
  write_text_file(dir / "manifest.txt", manifest.str());
}

ToyDiarizerParams load_checkpoint(const std::filesystem::path &dir) {
  std::istringstream in(read_text_file(dir / "manifest.txt"));
  ModelShape shape;
  std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> shapes;
  std::string line;
  int line_no = 0;
  bool saw_format = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::vector<std::string> rest;
    for (std::string f; fields >> f;) rest.push_back(f);
    if (key == "tensor") {
      if (rest.size() != 3) throw ParseError(line_no, "tensor line needs name, rows and cols");
      shapes[rest[0]] = {to_int(rest[1], line_no), to_int(rest[2], line_no)};
      continue;
    }
    if (rest.size() != 1) throw ParseError(line_no, "expected '<key> <value>'");
    const std::string &v = rest[0];
    if (key == "format") {
      if (v != "sortform-toy-1") throw ParseError(line_no, "unsupported checkpoint format '" + v + "'");
      saw_format = true;
    } else if (key == "input_dim") {
      shape.input_dim = to_int(v, line_no);
    } else if (key == "model_dim") {
      shape.model_dim = to_int(v, line_no);
    } else if (key == "heads") {
      shape.heads = to_int(v, line_no);
    } else if (key == "layers") {
      shape.layers = to_int(v, line_no);
    } else if (key == "ff_dim") {
      shape.ff_dim = to_int(v, line_no);
    } else if (key == "num_speakers") {
      shape.num_speakers = to_int(v, line_no);
    } else if (key == "positional_mode") {
      shape.positional_mode = parse_positional_mode(v);
    } else if (key == "max_frames") {
      shape.max_frames = to_int(v, line_no);
    } else {
      throw ParseError(line_no, "unknown manifest key '" + key + "'");
    }
  }
  if (!saw_format) throw ParseError(1, "manifest lacks a format line");

  ToyDiarizerParams params = init_params(shape, 0);
  params.for_each_tensor([&](const std::string &name, Matrix &m) {
    const auto it = shapes.find(name);
    if (it == shapes.end()) throw ValidationError("checkpoint is missing tensor " + name);
    Matrix loaded = load_matrix(dir / tensor_file(name));
    if (loaded.rows() != it->second.first || loaded.cols() != it->second.second ||
        loaded.rows() != m.rows() || loaded.cols() != m.cols()) {
      throw ValidationError("tensor " + name + " has an unexpected shape");
    }
    m = std::move(loaded);
  });
  params.validate();
  return params;
}

}  // namespace sortform::nn
