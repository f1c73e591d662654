#include <missformer/checkpoint.hpp>

#include <missformer/trajectory.hpp>  // format_double / parse_double

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace missformer {

namespace {

constexpr const char* kMagic = "missformer-checkpoint v1";

static_assert(sizeof(double) == 8, "checkpoint format assumes 64-bit doubles");

void write_le_doubles(std::ostream& out, const DenseMatrix<double>& m) {
  // row-major element order, independent of the in-memory layout
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(m(i, j));
      if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap64(bits);
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
}

DenseMatrix<double> read_le_doubles(std::istream& in, Index rows, Index cols,
                                    const std::string& name) {
  DenseMatrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      char buf[8];
      in.read(buf, 8);
      if (!in)
        throw std::runtime_error("checkpoint truncated while reading parameter '" + name + "'");
      std::uint64_t bits;
      std::memcpy(&bits, buf, 8);
      if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap64(bits);
      m(i, j) = std::bit_cast<double>(bits);
    }
  return m;
}

}  // namespace

void save_checkpoint(const MissFormerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const ModelConfig& config = model.config();
  out << kMagic << '\n';
  out << "d_model " << config.d_model << '\n';
  out << "n_head " << config.n_head << '\n';
  out << "n_layer " << config.n_layer << '\n';
  out << "d_ff " << config.d_ff << '\n';
  out << "k_max " << config.k_max << '\n';
  out << "input_mode " << to_string(config.input_mode) << '\n';
  out << "pe_variant " << to_string(config.pe_variant) << '\n';
  out << "coord_scale " << format_double(config.coord_scale) << '\n';
  out << "seed " << config.seed << '\n';
  for (const NamedParam& p : model.parameters())
    out << "param " << p.name << ' ' << p.tensor.rows() << ' ' << p.tensor.cols() << '\n';
  out << "data\n";
  for (const NamedParam& p : model.parameters()) write_le_doubles(out, p.tensor.value());
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

MissFormerModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("'" + path + "' is not a " + kMagic + " file");

  ModelConfig config;
  struct DeclaredParam {
    std::string name;
    Index rows, cols;
  };
  std::vector<DeclaredParam> declared;
  bool saw_data = false;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "data") {
      saw_data = true;
      break;
    }
    if (key == "d_model") fields >> config.d_model;
    else if (key == "n_head") fields >> config.n_head;
    else if (key == "n_layer") fields >> config.n_layer;
    else if (key == "d_ff") fields >> config.d_ff;
    else if (key == "k_max") fields >> config.k_max;
    else if (key == "seed") fields >> config.seed;
    else if (key == "input_mode") {
      std::string v;
      fields >> v;
      config.input_mode = sequence_mode_from_string(v);
    } else if (key == "pe_variant") {
      std::string v;
      fields >> v;
      config.pe_variant = pe_variant_from_string(v);
    } else if (key == "coord_scale") {
      std::string v;
      fields >> v;
      config.coord_scale = parse_double(v, "coord_scale", 0);
    } else if (key == "param") {
      DeclaredParam p;
      fields >> p.name >> p.rows >> p.cols;
      declared.push_back(p);
    } else {
      throw std::runtime_error("unknown checkpoint header key '" + key + "' in '" + path + "'");
    }
    if (fields.fail())
      throw std::runtime_error("malformed checkpoint header line '" + line + "' in '" + path + "'");
  }
  if (!saw_data) throw std::runtime_error("checkpoint '" + path + "' has no data section");

  MissFormerModel model(config);  // synthesizes the parameter table to check against
  const auto& params = model.parameters();
  if (declared.size() != params.size())
    throw std::runtime_error("checkpoint declares " + std::to_string(declared.size()) +
                             " parameters, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (declared[i].name != params[i].name || declared[i].rows != params[i].tensor.rows() ||
        declared[i].cols != params[i].tensor.cols())
      throw std::runtime_error("checkpoint parameter '" + declared[i].name +
                               "' does not match the declared architecture");
  }
  for (auto& p : model.parameters())
    p.tensor.update_value(read_le_doubles(in, p.tensor.rows(), p.tensor.cols(), p.name));
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("checkpoint '" + path + "' has trailing bytes after the data section");
  return model;
}

}  // namespace missformer
