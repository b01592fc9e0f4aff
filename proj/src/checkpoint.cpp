#include "codemine/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace codemine {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'E', 'N', 'C', 'D', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

json vocab_json(const Vocabulary& v) {
  return {{"tokens", v.tokens()}, {"min_frequency", v.min_frequency()}, {"hash", to_hex(v.hash())}};
}

Vocabulary vocab_from(const json& j, const std::string& path) {
  Vocabulary v = Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>(),
                                         j.at("min_frequency").get<int>());
  if (to_hex(v.hash()) != j.at("hash").get<std::string>())
    throw UserError(path + ": vocabulary hash mismatch");
  return v;
}

}  // namespace

void round_to_float(EncDecParams& params) {
  for (auto& t : params.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<float>(t.data[i]);
}

void save_checkpoint(const std::string& path, const EncDecModel& model, const OutputMeta& meta) {
  EncDecModel copy = model;
  auto tensors = copy.params.tensors();
  json shapes = json::array();
  std::ostringstream text;
  text << "# " << meta.tool_version << " config " << meta.config_hash << "\n"
       << "direction " << direction_code(model.direction) << "\n"
       << "cell " << cell_name(model.dims.cell) << "\n"
       << "embed " << model.dims.embed << "\nhidden " << model.dims.hidden << "\n"
       << "source_vocab " << model.source_vocab.size() << " " << to_hex(model.source_vocab.hash())
       << "\ntarget_vocab " << model.target_vocab.size() << " "
       << to_hex(model.target_vocab.hash()) << "\n"
       << "seed " << model.meta.seed << "\nstep " << model.meta.step << "\n"
       << "validation_log_likelihood " << format_double(model.meta.validation_log_likelihood)
       << "\n";
  for (const auto& t : tensors) {
    shapes.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    text << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
  }
  json manifest = {
      {"format", 1},
      {"meta", meta_to_json(meta)},
      {"direction", direction_code(model.direction)},
      {"cell", cell_name(model.dims.cell)},
      {"embed", model.dims.embed},
      {"hidden", model.dims.hidden},
      {"max_source_tokens", model.max_source_tokens},
      {"max_target_tokens", model.max_target_tokens},
      {"seed", model.meta.seed},
      {"step", model.meta.step},
      {"validation_log_likelihood", model.meta.validation_log_likelihood},
      {"language", model.meta.language},
      {"source_vocab", vocab_json(model.source_vocab)},
      {"target_vocab", vocab_json(model.target_vocab)},
      {"tensors", shapes},
  };
  const std::string mtext = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(mtext.size()));
  out += mtext;
  for (const auto& t : tensors) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      // Eigen is column-major; write row-major.
      const Eigen::Index r = i / t.cols, c = i % t.cols;
      const float f = static_cast<float>(t.data[c * t.rows + r]);
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  write_file(path, out);
  write_file(path + ".manifest.txt", text.str());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const std::string in = read_file(path);
  if (in.size() < 12 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    throw UserError(path + ": not a codemine checkpoint");
  const std::uint32_t mlen = get_u32(in, 8);
  if (12 + static_cast<std::size_t>(mlen) > in.size()) throw UserError(path + ": truncated manifest");
  json manifest;
  try {
    manifest = json::parse(in.substr(12, mlen));
  } catch (const json::exception& e) {
    throw UserError(path + ": bad manifest: " + e.what());
  }
  LoadedCheckpoint out;
  try {
    const json& mj = manifest.at("meta");
    out.meta.config_hash = mj.at("config_hash").get<std::string>();
    out.meta.tool_version = mj.at("tool_version").get<std::string>();
    out.meta.kind = mj.value("kind", "");
    ModelDims dims;
    dims.embed = manifest.at("embed").get<int>();
    dims.hidden = manifest.at("hidden").get<int>();
    dims.cell = parse_cell(manifest.at("cell").get<std::string>());
    EncDecModel& m = out.model;
    m = EncDecModel::create(parse_direction(manifest.at("direction").get<std::string>()), dims,
                            vocab_from(manifest.at("source_vocab"), path),
                            vocab_from(manifest.at("target_vocab"), path));
    m.max_source_tokens = manifest.at("max_source_tokens").get<int>();
    m.max_target_tokens = manifest.at("max_target_tokens").get<int>();
    m.meta.seed = manifest.at("seed").get<std::uint64_t>();
    m.meta.step = manifest.at("step").get<std::int64_t>();
    m.meta.validation_log_likelihood = manifest.at("validation_log_likelihood").get<double>();
    m.meta.language = manifest.at("language").get<std::string>();

    auto tensors = m.params.tensors();
    const json& shapes = manifest.at("tensors");
    if (shapes.size() != tensors.size()) throw UserError(path + ": tensor count mismatch");
    std::size_t pos = 12 + mlen;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      auto& view = tensors[t];
      if (shapes[t].at("name").get<std::string>() != view.name ||
          shapes[t].at("rows").get<Eigen::Index>() != view.rows ||
          shapes[t].at("cols").get<Eigen::Index>() != view.cols)
        throw UserError(path + ": tensor " + view.name + " has unexpected shape");
      if (pos + 4 * static_cast<std::size_t>(view.size()) > in.size())
        throw UserError(path + ": truncated tensor data");
      for (Eigen::Index i = 0; i < view.size(); ++i, pos += 4) {
        const Eigen::Index r = i / view.cols, c = i % view.cols;
        view.data[c * view.rows + r] = std::bit_cast<float>(get_u32(in, pos));
      }
    }
    if (pos != in.size()) throw UserError(path + ": trailing bytes after tensors");
  } catch (const json::exception& e) {
    throw UserError(path + ": bad manifest: " + e.what());
  }
  return out;
}

}  // namespace codemine
