#include "dcmr/checkpoint.hpp"

#include <cstring>

#include "dcmr/config.hpp"
#include "dcmr/io.hpp"

namespace dcmr {

namespace {

struct TensorRef {
  std::string name;
  std::vector<int> shape;
  const std::vector<float>* data;
};

std::vector<TensorRef> tensor_refs(const Checkpoint& c) {
  std::vector<TensorRef> refs;
  for (const auto& t : c.params.tensors) refs.push_back({t.name, t.shape, &t.data});
  for (std::size_t i = 0; i < c.params.tensors.size(); ++i) {
    refs.push_back({"adam.m/" + c.params.tensors[i].name, c.params.tensors[i].shape, &c.optimizer.m.at(i)});
    refs.push_back({"adam.v/" + c.params.tensors[i].name, c.params.tensors[i].shape, &c.optimizer.v.at(i)});
  }
  return refs;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Json header;
  header["denoiser"] = to_json(c.denoiser);
  header["train"] = to_json(c.train);
  header["state"] = Json{{"step", c.step},
                         {"epoch", c.epoch},
                         {"adam_step", c.optimizer.step},
                         {"rng",
                          {{"order", c.rngs.order.state()},
                           {"eps", c.rngs.eps.state()},
                           {"timestep", c.rngs.t.state()},
                           {"augment", c.rngs.augment.state()}}}};
  Json hist = Json::array();
  for (const auto& r : c.history) hist.push_back(Json::array({r.step, r.epoch, static_cast<double>(r.loss)}));
  header["state"]["history"] = std::move(hist);

  std::string payload;
  Json dir = Json::array();
  for (const auto& ref : tensor_refs(c)) {
    const std::size_t bytes = ref.data->size() * sizeof(float);
    dir.push_back(Json{{"name", ref.name}, {"dtype", "f32"}, {"shape", ref.shape}, {"offset", payload.size()},
                       {"bytes", bytes}});
    payload.append(reinterpret_cast<const char*>(ref.data->data()), bytes);
  }
  header["tensors"] = std::move(dir);

  const std::string text = header.dump();
  std::string out(kCheckpointMagic, 4);
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source,
                             const std::optional<DenoiserConfig>& expected) {
  io::Reader in(bytes, source);
  const std::string magic = in.take(4);
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) throw FormatError(source + ": not a checkpoint (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw IncompatibleError(source + ": checkpoint version " + std::to_string(version) + ", expected " +
                            std::to_string(kCheckpointVersion));
  const std::uint64_t hlen = in.u64();
  if (hlen > in.remaining()) throw FormatError(source + ": truncated header");
  const Json header = Json::parse(in.take(hlen), nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw FormatError(source + ": malformed header");
  const std::size_t payload_start = in.position();
  const std::size_t payload_size = in.remaining();

  Checkpoint c;
  try {
    c.denoiser = denoiser_from_json(header.at("denoiser"));
    c.train = train_from_json(header.at("train"));
    if (expected) {
      const std::string diff = first_difference(to_json(*expected), header.at("denoiser"));
      if (!diff.empty())
        throw IncompatibleError(source + ": denoiser config mismatch in field '" + diff + "'");
    }
    const Json& st = header.at("state");
    c.step = st.at("step").get<std::int64_t>();
    c.epoch = st.at("epoch").get<int>();
    c.optimizer.step = st.at("adam_step").get<std::int64_t>();
    c.rngs.order.restore(st.at("rng").at("order").get<std::string>());
    c.rngs.eps.restore(st.at("rng").at("eps").get<std::string>());
    c.rngs.t.restore(st.at("rng").at("timestep").get<std::string>());
    c.rngs.augment.restore(st.at("rng").at("augment").get<std::string>());
    for (const auto& r : st.at("history"))
      c.history.push_back({r.at(0).get<std::int64_t>(), r.at(1).get<int>(), static_cast<float>(r.at(2).get<double>())});

    c.params.config = c.denoiser;
    const auto layout = parameter_layout(c.denoiser);
    const Json& dir = header.at("tensors");
    if (dir.size() != 3 * layout.size()) throw FormatError(source + ": tensor directory does not match the architecture");
    std::size_t consumed = 0;
    auto read_tensor = [&](const Json& e, const std::string& want, const std::vector<int>& shape) {
      if (e.at("name").get<std::string>() != want) throw FormatError(source + ": expected tensor " + want);
      if (e.at("dtype").get<std::string>() != "f32") throw FormatError(source + ": unsupported dtype for " + want);
      if (e.at("shape").get<std::vector<int>>() != shape) throw FormatError(source + ": shape mismatch for " + want);
      const std::size_t off = e.at("offset").get<std::size_t>(), nbytes = e.at("bytes").get<std::size_t>();
      std::size_t n = 1;
      for (int s : shape) n *= static_cast<std::size_t>(s);
      if (nbytes != n * sizeof(float) || off > payload_size || nbytes > payload_size - off)
        throw FormatError(source + ": tensor " + want + " exceeds the payload (truncated file?)");
      consumed += nbytes;
      std::vector<float> data(n);
      std::memcpy(data.data(), bytes.data() + payload_start + off, nbytes);
      return data;
    };
    for (std::size_t i = 0; i < layout.size(); ++i)
      c.params.tensors.push_back({layout[i].name, layout[i].shape, read_tensor(dir[i], layout[i].name, layout[i].shape)});
    c.params.reindex();
    for (std::size_t i = 0; i < layout.size(); ++i) {
      c.optimizer.m.push_back(read_tensor(dir[layout.size() + 2 * i], "adam.m/" + layout[i].name, layout[i].shape));
      c.optimizer.v.push_back(read_tensor(dir[layout.size() + 2 * i + 1], "adam.v/" + layout[i].name, layout[i].shape));
    }
    if (consumed != payload_size) throw FormatError(source + ": unexpected trailing bytes after the tensor payload");
  } catch (const Json::exception& e) {
    throw FormatError(source + ": malformed header: " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(source + ": " + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<DenoiserConfig>& expected) {
  return decode_checkpoint(io::read_file(path), path.string(), expected);
}

}  // namespace dcmr
