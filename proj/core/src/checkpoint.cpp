#include "onn/checkpoint.hpp"

#include <fstream>
#include <map>

#include "onn/binary_io.hpp"
#include "onn/errors.hpp"

namespace onn {

namespace {

constexpr std::string_view kCheckpointMagic = "ONNCKPT1";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_config(BinaryWriter& w, const ModelConfig& c) {
  w.u8(static_cast<std::uint8_t>(c.kind));
  w.u8(static_cast<std::uint8_t>(c.variant));
  w.u64(c.embed_dim);
  w.u64(c.copy_dim);
  w.u64(c.subnet_width);
  w.f64(c.init_scale);
  w.u8(c.shallow_terms);
  w.u8(c.pairwise);
  w.u64(c.mlp.hidden.size());
  for (auto h : c.mlp.hidden) w.u64(h);
  w.u8(c.mlp.batch_norm);
  w.f64(c.mlp.dropout);
  w.f64(c.mlp.bn_momentum);
  w.f64(c.mlp.bn_epsilon);
}

ModelConfig read_config(BinaryReader& r) {
  ModelConfig c;
  const auto kind = r.u8();
  const auto variant = r.u8();
  if (kind > 4 || variant > 3) throw DataError("checkpoint: bad model kind or variant");
  c.kind = static_cast<ModelKind>(kind);
  c.variant = static_cast<ProductVariant>(variant);
  c.embed_dim = r.u64();
  c.copy_dim = r.u64();
  c.subnet_width = r.u64();
  c.init_scale = r.f64();
  c.shallow_terms = r.u8() != 0;
  c.pairwise = r.u8() != 0;
  c.mlp.hidden.resize(r.u64());
  for (auto& h : c.mlp.hidden) h = r.u64();
  c.mlp.batch_norm = r.u8() != 0;
  c.mlp.dropout = r.f64();
  c.mlp.bn_momentum = r.f64();
  c.mlp.bn_epsilon = r.f64();
  return c;
}

void write_tensor(BinaryWriter& w, const std::string& name, const DenseMatrix& m) {
  w.str(name);
  w.u64(m.rows());
  w.u64(m.cols());
  w.f64s(m.flat());
}

}  // namespace

void save_checkpoint(ModelGraph& graph, std::uint64_t schema_hash, std::ostream& out) {
  BinaryWriter w(out);
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(schema_hash);
  write_config(w, graph.config());

  const auto& cards = graph.cardinalities();
  w.u64(cards.size());
  for (auto c : cards) w.u64(c);

  const OperationMap& map = graph.operation_map();
  for (std::size_t i = 0; i < map.field_count(); ++i) {
    const auto& ops = map.operations(i);
    w.u64(ops.size());
    for (std::size_t n = 0; n < ops.size(); ++n) {
      w.u8(static_cast<std::uint8_t>(ops[n].kind));
      w.u64(ops[n].partner);
      w.u8(static_cast<std::uint8_t>(ops[n].variant));
      w.u64(map.slots(i)[n]);
    }
  }
  const EmbeddingDims& dims = graph.bank().dims();
  for (const auto& field : dims) {
    w.u64(field.size());
    for (auto d : field) w.u64(d);
  }

  ParamList params = graph.params();
  std::vector<NamedBuffer> buffers = graph.buffers();
  w.u64(params.size() + buffers.size());
  for (Parameter* p : params) write_tensor(w, p->name, p->value);
  for (const auto& b : buffers) write_tensor(w, b.name, *b.tensor);
  if (!out) throw DataError("failed writing checkpoint");
}

void save_checkpoint(ModelGraph& graph, std::uint64_t schema_hash, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  save_checkpoint(graph, schema_hash, out);
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  BinaryReader r(in);
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) throw DataError("not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  LoadedCheckpoint loaded;
  loaded.schema_hash = r.u64();
  ModelConfig config = read_config(r);

  std::vector<std::size_t> cards(r.u64());
  for (auto& c : cards) c = r.u64();

  std::vector<std::vector<OperationDescriptor>> ops(cards.size());
  std::vector<std::vector<std::size_t>> slots(cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) {
    const std::size_t n = r.u64();
    for (std::size_t k = 0; k < n; ++k) {
      OperationDescriptor op;
      const auto kind = r.u8();
      op.partner = r.u64();
      const auto variant = r.u8();
      if (kind > 1 || variant > 3) throw DataError("checkpoint: bad operation descriptor");
      op.kind = static_cast<OpKind>(kind);
      op.variant = static_cast<ProductVariant>(variant);
      ops[i].push_back(op);
      slots[i].push_back(r.u64());
    }
  }
  EmbeddingDims dims(cards.size());
  for (auto& field : dims) {
    field.resize(r.u64());
    for (auto& d : field) d = r.u64();
  }
  config.dims = dims;

  ModelGraph graph;
  try {
    const OperationMap stored = OperationMap::from_parts(config.kind, config.variant, ops, slots);
    SeededRng unused(0);
    graph = ModelGraph::build(cards, config, unused);
    if (!(graph.operation_map() == stored)) throw DataError("checkpoint: operation map does not match model kind");
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  std::map<std::string, DenseMatrix*> slots_by_name;
  for (Parameter* p : graph.params()) slots_by_name[p->name] = &p->value;
  for (const auto& b : graph.buffers()) slots_by_name[b.name] = b.tensor;

  const std::size_t count = r.u64();
  if (count != slots_by_name.size()) throw DataError("checkpoint: tensor count does not match the model");
  for (std::size_t t = 0; t < count; ++t) {
    const std::string name = r.str();
    const std::size_t rows = r.u64();
    const std::size_t cols = r.u64();
    auto it = slots_by_name.find(name);
    if (it == slots_by_name.end()) throw DataError("checkpoint: unexpected tensor " + name);
    DenseMatrix* dst = it->second;
    if (dst->rows() != rows || dst->cols() != cols) throw DataError("checkpoint: shape mismatch for " + name);
    r.f64s(dst->flat());
    slots_by_name.erase(it);
  }
  loaded.graph = std::move(graph);
  return loaded;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

ModelGraph load_checkpoint(const std::string& path, const FeatureSchema& schema) {
  LoadedCheckpoint loaded = load_checkpoint(path);
  if (loaded.schema_hash != schema.hash()) throw DataError("checkpoint " + path + " was trained on a different schema");
  return std::move(loaded.graph);
}

}  // namespace onn
