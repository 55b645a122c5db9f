#include "textkg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "textkg/kg.hpp"
#include "textkg/rng.hpp"

namespace textkg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct MaskBuilder {
  std::size_t rows, cols;
  std::vector<double> additive;
  std::vector<MaskReason> reasons;

  MaskBuilder(std::size_t r, std::size_t c)
      : rows(r), cols(c), additive(r * c, 0.0), reasons(r * c, MaskReason::allowed) {}

  void block(std::size_t q, std::size_t k, MaskReason why) {
    additive[q * cols + k] = kNegInf;
    reasons[q * cols + k] = why;
  }

  MaskMatrix finish() {
    MaskMatrix m;
    m.additive = Tensor({rows, cols}, std::move(additive));
    m.reasons = std::move(reasons);
    m.rows = rows;
    m.cols = cols;
    return m;
  }
};

struct CaptionSpan {
  bool present = false;
  std::size_t start = 0, length = 0;
};

CaptionSpan caption_span(const SegmentMap& s) {
  CaptionSpan c;
  if (const Segment* seg = s.find(SegmentKind::caption)) {
    c.present = seg->length > 0;
    c.start = seg->start;
    c.length = seg->length;
  }
  return c;
}

bool in_span(const CaptionSpan& c, std::size_t row) {
  return c.present && row >= c.start && row < c.start + c.length;
}

// Caption causality + the context→caption closure shared by all masks.
void apply_caption_rules(MaskBuilder& b, const CaptionSpan& cq, const CaptionSpan& ck) {
  if (!ck.present) return;
  for (std::size_t q = 0; q < b.rows; ++q) {
    bool q_caption = in_span(cq, q);
    for (std::size_t k = ck.start; k < ck.start + ck.length; ++k) {
      if (q_caption) {
        std::size_t tq = q - cq.start, tk = k - ck.start;
        if (tk > tq) b.block(q, k, MaskReason::causal);
      } else {
        b.block(q, k, MaskReason::context_caption);
      }
    }
  }
}

std::size_t segment_offset(const SegmentMap& s, SegmentKind kind) {
  const Segment* seg = s.find(kind);
  return seg ? seg->start : 0;
}

std::size_t segment_length(const SegmentMap& s, SegmentKind kind) {
  const Segment* seg = s.find(kind);
  return seg ? seg->length : 0;
}

}  // namespace

MaskMatrix build_internal_mask(const SegmentMap& segmap) {
  MaskBuilder b(segmap.total, segmap.total);
  auto cap = caption_span(segmap);
  apply_caption_rules(b, cap, cap);
  return b.finish();
}

MaskMatrix build_external_mask(const SegmentMap& segmap) {
  MaskBuilder b(segmap.total, segmap.total);
  auto cap = caption_span(segmap);
  apply_caption_rules(b, cap, cap);

  std::size_t ks = segment_offset(segmap, SegmentKind::knowledge);
  std::size_t kl = segment_length(segmap, SegmentKind::knowledge);
  std::size_t rs = segment_offset(segmap, SegmentKind::region);
  std::size_t rl = segment_length(segmap, SegmentKind::region);

  // caption → knowledge: knowledge reaches captions only through regions
  if (cap.present && kl > 0)
    for (std::size_t q = cap.start; q < cap.start + cap.length; ++q)
      for (std::size_t k = ks; k < ks + kl; ++k) b.block(q, k, MaskReason::knowledge_isolation);

  // region ↔ knowledge: blocked unless the knowledge token was retrieved for
  // that region's category
  if (rl > 0 && kl > 0) {
    if (segmap.region_categories.size() != rl || segmap.knowledge_categories.size() != kl)
      throw std::invalid_argument("external mask: category annotations do not match segments");
    for (std::size_t i = 0; i < rl; ++i) {
      const std::string rc = fold_term(segmap.region_categories[i]);
      for (std::size_t j = 0; j < kl; ++j) {
        if (rc != fold_term(segmap.knowledge_categories[j])) {
          b.block(rs + i, ks + j, MaskReason::knowledge_relevance);
          b.block(ks + j, rs + i, MaskReason::knowledge_relevance);
        }
      }
    }
  }
  return b.finish();
}

MaskMatrix build_cross_mask(const SegmentMap& query, const SegmentMap& key) {
  MaskBuilder b(query.total, key.total);
  auto cq = caption_span(query);
  auto ck = caption_span(key);
  if (cq.present && ck.present && cq.length != ck.length)
    throw std::invalid_argument("cross mask: caption segments of unequal length (" +
                                std::to_string(cq.length) + " vs " + std::to_string(ck.length) +
                                ")");
  apply_caption_rules(b, cq, ck);

  // knowledge isolation when the key stream is the external one
  std::size_t ks = segment_offset(key, SegmentKind::knowledge);
  std::size_t kl = segment_length(key, SegmentKind::knowledge);
  if (cq.present && kl > 0)
    for (std::size_t q = cq.start; q < cq.start + cq.length; ++q)
      for (std::size_t k = ks; k < ks + kl; ++k) b.block(q, k, MaskReason::knowledge_isolation);
  return b.finish();
}

Tensor attention_sublayer(const Tensor& x_q, const Tensor& x_kv, const MaskMatrix& mask,
                          const AttentionParams& p, std::size_t heads, bool allow_empty_rows,
                          AttnProbe* probe, const std::string& label) {
  std::size_t d = x_q.cols();
  if (x_kv.cols() != d)
    throw std::invalid_argument("attention: query width " + std::to_string(d) +
                                " vs key width " + std::to_string(x_kv.cols()));
  if (d % heads != 0)
    throw std::invalid_argument("attention: width " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  if (mask.rows != x_q.rows() || mask.cols != x_kv.rows())
    throw std::invalid_argument("attention: mask " + std::to_string(mask.rows) + "x" +
                                std::to_string(mask.cols) + " for " +
                                std::to_string(x_q.rows()) + " queries, " +
                                std::to_string(x_kv.rows()) + " keys");
  std::size_t dh = d / heads;
  double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = matmul(x_q, p.wq);
  Tensor k = matmul(x_kv, p.wk);
  Tensor v = matmul(x_kv, p.wv);

  std::vector<Tensor> head_outs;
  head_outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor logits = scale(matmul_nt(qh, kh), sc);
    Tensor probs = masked_softmax(logits, mask.additive, allow_empty_rows);
    if (probe)
      probe->entries.push_back(
          {label, h, Tensor(probs.shape(), probs.values())});  // detached copy
    head_outs.push_back(matmul(probs, vh));
  }
  Tensor attended = heads == 1 ? head_outs[0] : concat_cols(head_outs);
  Tensor projected = add_row(matmul(attended, p.wo), p.bo);
  return layer_norm(add(x_q, projected), p.ln_g, p.ln_b);
}

Tensor ffn_sublayer(const Tensor& x, const FfnParams& p) {
  Tensor h = gelu(add_row(matmul(x, p.w1), p.b1));
  Tensor out = add_row(matmul(h, p.w2), p.b2);
  return layer_norm(add(x, out), p.ln_g, p.ln_b);
}

// --- model construction --------------------------------------------------------

namespace {

Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-limit, limit);
  Tensor t({rows, cols}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor table_init(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  Tensor t({rows, cols}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor zeros_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor ones_param(std::size_t n) {
  Tensor t({n}, std::vector<double>(n, 1.0));
  t.set_requires_grad(true);
  return t;
}

AttentionParams init_attention(Rng& rng, std::size_t d) {
  AttentionParams p;
  p.wq = xavier(rng, d, d);
  p.wk = xavier(rng, d, d);
  p.wv = xavier(rng, d, d);
  p.wo = xavier(rng, d, d);
  p.bo = zeros_param({1, d});
  p.ln_g = ones_param(d);
  p.ln_b = zeros_param({d});
  return p;
}

FfnParams init_ffn(Rng& rng, std::size_t d) {
  FfnParams p;
  p.w1 = xavier(rng, d, 4 * d);
  p.b1 = zeros_param({1, 4 * d});
  p.w2 = xavier(rng, 4 * d, d);
  p.b2 = zeros_param({1, d});
  p.ln_g = ones_param(d);
  p.ln_b = zeros_param({d});
  return p;
}

void register_attention(std::vector<TextKGModel::NamedParam>& out, const std::string& prefix,
                        const AttentionParams& p) {
  out.push_back({prefix + ".wq", p.wq, true});
  out.push_back({prefix + ".wk", p.wk, true});
  out.push_back({prefix + ".wv", p.wv, true});
  out.push_back({prefix + ".wo", p.wo, true});
  out.push_back({prefix + ".bo", p.bo, false});
  out.push_back({prefix + ".ln_g", p.ln_g, false});
  out.push_back({prefix + ".ln_b", p.ln_b, false});
}

void register_ffn(std::vector<TextKGModel::NamedParam>& out, const std::string& prefix,
                  const FfnParams& p) {
  out.push_back({prefix + ".w1", p.w1, true});
  out.push_back({prefix + ".b1", p.b1, false});
  out.push_back({prefix + ".w2", p.w2, true});
  out.push_back({prefix + ".b2", p.b2, false});
  out.push_back({prefix + ".ln_g", p.ln_g, false});
  out.push_back({prefix + ".ln_b", p.ln_b, false});
}

}  // namespace

std::size_t TextKGModel::relation_row(const std::string& label) const {
  std::string folded = fold_term(label);
  for (std::size_t i = 0; i < relations.size(); ++i)
    if (relations[i] == folded) return i;
  return relations.size();  // rel_unk
}

std::vector<TextKGModel::NamedParam> TextKGModel::parameters() {
  std::vector<NamedParam> out;
  out.push_back({"proj.video.w", proj_video_w, true});
  out.push_back({"proj.video.b", proj_video_b, false});
  out.push_back({"proj.region.w", proj_region_w, true});
  out.push_back({"proj.region.b", proj_region_b, false});
  out.push_back({"proj.transcript.w", proj_transcript_w, true});
  out.push_back({"proj.transcript.b", proj_transcript_b, false});
  out.push_back({"proj.caption.w", proj_caption_w, true});
  out.push_back({"proj.caption.b", proj_caption_b, false});
  out.push_back({"proj.knowledge.w", proj_knowledge_w, true});
  out.push_back({"proj.knowledge.b", proj_knowledge_b, false});
  out.push_back({"caption.bos", bos_vec, false});
  out.push_back({"caption.eos", eos_vec, false});
  out.push_back({"relations.table", relation_table, false});
  out.push_back({"pos.region", pos.region, false});
  out.push_back({"pos.knowledge", pos.knowledge, false});
  out.push_back({"pos.transcript", pos.transcript, false});
  out.push_back({"pos.caption", pos.caption, false});
  out.push_back({"pos.video", pos.video, false});
  out.push_back({"type.ext", type_ext, false});
  out.push_back({"type.int", type_int, false});
  for (std::size_t i = 0; i < ext_blocks.size(); ++i) {
    std::string p = "ext.block" + std::to_string(i);
    register_attention(out, p + ".self.attn", ext_blocks[i].self_set.attn);
    register_ffn(out, p + ".self.ffn", ext_blocks[i].self_set.ffn);
    register_attention(out, p + ".cross.attn", ext_blocks[i].cross_set.attn);
    register_ffn(out, p + ".cross.ffn", ext_blocks[i].cross_set.ffn);
  }
  for (std::size_t i = 0; i < int_blocks.size(); ++i) {
    std::string p = "int.block" + std::to_string(i);
    register_attention(out, p + ".self.attn", int_blocks[i].self_set.attn);
    register_ffn(out, p + ".self.ffn", int_blocks[i].self_set.ffn);
    register_attention(out, p + ".cross.attn", int_blocks[i].cross_set.attn);
    register_ffn(out, p + ".cross.ffn", int_blocks[i].cross_set.ffn);
  }
  out.push_back({"head.ext.w", head_ext_w, true});
  out.push_back({"head.ext.b", head_ext_b, false});
  out.push_back({"head.int.w", head_int_w, true});
  out.push_back({"head.int.b", head_int_b, false});
  return out;
}

std::vector<const TextKGModel::NamedParam*> TextKGModel::parameters_const() const {
  // registry is rebuilt on demand; const access goes through a copy
  static thread_local std::vector<NamedParam> storage;
  storage = const_cast<TextKGModel*>(this)->parameters();
  std::vector<const NamedParam*> out;
  out.reserve(storage.size());
  for (const auto& p : storage) out.push_back(&p);
  return out;
}

TextKGModel init_model(const ModalityConfig& cfg, double omega1, double omega2,
                       const Vocabulary& vocab, const std::vector<std::string>& relations,
                       std::uint64_t seed) {
  cfg.validate();
  if (omega1 < 0 || omega2 < 0)
    throw std::invalid_argument("model: fusion weights must be non-negative");
  TextKGModel m;
  m.cfg = cfg;
  m.omega1 = omega1;
  m.omega2 = omega2;
  m.vocab = vocab;
  m.relations.reserve(relations.size());
  for (const auto& r : relations) m.relations.push_back(fold_term(r));

  Rng rng(mix64(seed, 0x7478746b67ull));  // model-init stream
  std::size_t d = cfg.d_model;
  std::size_t V = vocab.size();

  m.proj_video_w = xavier(rng, cfg.appearance_dim + cfg.motion_dim, d);
  m.proj_video_b = zeros_param({1, d});
  m.proj_region_w = xavier(rng, cfg.region_dim, d);
  m.proj_region_b = zeros_param({1, d});
  m.proj_transcript_w = xavier(rng, cfg.word_dim, d);
  m.proj_transcript_b = zeros_param({1, d});
  m.proj_caption_w = xavier(rng, cfg.word_dim, d);
  m.proj_caption_b = zeros_param({1, d});
  m.proj_knowledge_w = xavier(rng, cfg.word_dim, d);
  m.proj_knowledge_b = zeros_param({1, d});

  m.bos_vec = table_init(rng, 1, d, 0.02);
  m.eos_vec = table_init(rng, 1, d, 0.02);
  m.relation_table = table_init(rng, m.relations.size() + 1, cfg.word_dim, 0.1);

  m.pos.region = table_init(rng, cfg.n_r * cfg.max_video_frames, d, 0.02);
  m.pos.knowledge = table_init(rng, cfg.n_k * cfg.max_objects, d, 0.02);
  m.pos.transcript = table_init(rng, cfg.max_transcript, d, 0.02);
  m.pos.caption = table_init(rng, cfg.max_caption + 2, d, 0.02);
  m.pos.video = table_init(rng, cfg.max_video_frames, d, 0.02);
  m.type_ext = table_init(rng, kSegmentKinds, d, 0.02);
  m.type_int = table_init(rng, kSegmentKinds, d, 0.02);

  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    BlockParams b;
    b.self_set.attn = init_attention(rng, d);
    b.self_set.ffn = init_ffn(rng, d);
    b.cross_set.attn = init_attention(rng, d);
    b.cross_set.ffn = init_ffn(rng, d);
    m.ext_blocks.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    BlockParams b;
    b.self_set.attn = init_attention(rng, d);
    b.self_set.ffn = init_ffn(rng, d);
    b.cross_set.attn = init_attention(rng, d);
    b.cross_set.ffn = init_ffn(rng, d);
    m.int_blocks.push_back(std::move(b));
  }
  m.head_ext_w = xavier(rng, d, V);
  m.head_ext_b = zeros_param({1, V});
  m.head_int_w = xavier(rng, d, V);
  m.head_int_b = zeros_param({1, V});
  return m;
}

// --- forward -------------------------------------------------------------------

ForwardResult forward(TextKGModel& model, const StreamInput& ext, const StreamInput& inten,
                      AttnProbe* probe) {
  std::size_t cap_len = ext.segmap.caption_length();
  if (cap_len != inten.segmap.caption_length())
    throw std::invalid_argument("forward: caption segments of unequal length (" +
                                std::to_string(cap_len) + " vs " +
                                std::to_string(inten.segmap.caption_length()) + ")");
  if (cap_len == 0) throw std::invalid_argument("forward: empty caption segment");

  MaskMatrix ext_self = build_external_mask(ext.segmap);
  MaskMatrix int_self = build_internal_mask(inten.segmap);
  MaskMatrix cross_ext = build_cross_mask(ext.segmap, inten.segmap);
  MaskMatrix cross_int = build_cross_mask(inten.segmap, ext.segmap);

  Tensor x_ext = ext.tokens;
  Tensor x_int = inten.tokens;
  std::size_t heads = model.cfg.heads;
  for (std::size_t b = 0; b < model.ext_blocks.size(); ++b) {
    const std::string eb = "ext.block" + std::to_string(b);
    const std::string ib = "int.block" + std::to_string(b);
    const BlockParams& ep = model.ext_blocks[b];
    const BlockParams& ip = model.int_blocks[b];

    Tensor e_sa = ffn_sublayer(
        attention_sublayer(x_ext, x_ext, ext_self, ep.self_set.attn, heads, false, probe,
                           eb + ".self"),
        ep.self_set.ffn);
    Tensor i_sa = ffn_sublayer(
        attention_sublayer(x_int, x_int, int_self, ip.self_set.attn, heads, false, probe,
                           ib + ".self"),
        ip.self_set.ffn);
    x_ext = ffn_sublayer(attention_sublayer(e_sa, i_sa, cross_ext, ep.cross_set.attn, heads,
                                            true, probe, eb + ".cross"),
                         ep.cross_set.ffn);
    x_int = ffn_sublayer(attention_sublayer(i_sa, e_sa, cross_int, ip.cross_set.attn, heads,
                                            true, probe, ib + ".cross"),
                         ip.cross_set.ffn);
  }

  Tensor cap_ext = slice_rows(x_ext, ext.segmap.caption_start(), cap_len);
  Tensor cap_int = slice_rows(x_int, inten.segmap.caption_start(), cap_len);
  ForwardResult r;
  r.z_ext = row_softmax(add_row(matmul(cap_ext, model.head_ext_w), model.head_ext_b));
  r.z_int = row_softmax(add_row(matmul(cap_int, model.head_int_w), model.head_int_b));
  return r;
}

Fused fuse_and_argmax(const std::vector<double>& z_ext_row, const std::vector<double>& z_int_row,
                      double omega1, double omega2) {
  if (z_ext_row.size() != z_int_row.size())
    throw std::invalid_argument("fuse: row lengths differ");
  if (z_ext_row.empty()) throw std::invalid_argument("fuse: empty rows");
  Fused f;
  f.p.resize(z_ext_row.size());
  for (std::size_t i = 0; i < f.p.size(); ++i)
    f.p[i] = omega1 * z_ext_row[i] + omega2 * z_int_row[i];
  double best = f.p[0];
  for (double v : f.p) best = std::max(best, v);
  // values within a few ulps of the max count as tied so that ties that are
  // exact in real arithmetic survive rounding; lowest index wins
  double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(best);
  f.y = 0;
  while (f.p[f.y] < best - tol) ++f.y;
  return f;
}

// --- checkpoints -----------------------------------------------------------------

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw std::runtime_error("checkpoint: truncated file " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw std::runtime_error("checkpoint: truncated file " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, TextKGModel& model) {
  auto params = model.parameters();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write("TKG1", 4);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (auto& p : params) {
    write_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape& s = p.tensor.shape();
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    for (std::size_t dim : s) write_u64(out, dim);
  }
  for (auto& p : params) {
    for (double v : p.tensor.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      write_u64(out, bits);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, TextKGModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "TKG1", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  auto params = model.parameters();
  std::uint32_t count = read_u32(in, path);
  if (count != params.size())
    throw std::runtime_error("checkpoint: has " + std::to_string(count) + " parameters, model " +
                             std::to_string(params.size()));
  std::vector<Shape> shapes(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len))
      throw std::runtime_error("checkpoint: truncated file " + path);
    if (name != params[i].name)
      throw std::runtime_error("checkpoint: parameter " + std::to_string(i) + " is '" + name +
                               "', model expects '" + params[i].name + "'");
    std::uint32_t ndim = read_u32(in, path);
    Shape s(ndim);
    for (auto& dim : s) dim = read_u64(in, path);
    if (s != params[i].tensor.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file " +
                               shape_str(s) + ", model " + shape_str(params[i].tensor.shape()));
    shapes[i] = std::move(s);
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& values = params[i].tensor.raw();
    for (auto& v : values) {
      std::uint64_t bits = read_u64(in, path);
      std::memcpy(&v, &bits, 8);
    }
  }
}

void save_vocab_sidecar(const std::string& path, const Vocabulary& vocab,
                        const std::vector<std::string>& relations) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocab sidecar: cannot write " + path);
  out << "words " << vocab.size() << "\n";
  for (const auto& w : vocab.words()) out << w << "\n";
  out << "relations " << relations.size() << "\n";
  for (const auto& r : relations) out << r << "\n";
}

void load_vocab_sidecar(const std::string& path, Vocabulary& vocab,
                        std::vector<std::string>& relations) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab sidecar: cannot open " + path);
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "words")
    throw std::runtime_error("vocab sidecar: malformed header in " + path);
  std::string line;
  std::getline(in, line);  // consume newline
  vocab = Vocabulary();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("vocab sidecar: truncated word list in " + path);
    if (i < 4) {
      if (line != vocab.word(i))
        throw std::runtime_error("vocab sidecar: reserved token mismatch at index " +
                                 std::to_string(i));
    } else {
      vocab.add(line);
    }
  }
  if (!(in >> tag >> n) || tag != "relations")
    throw std::runtime_error("vocab sidecar: malformed relations header in " + path);
  std::getline(in, line);
  relations.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("vocab sidecar: truncated relation list in " + path);
    relations.push_back(line);
  }
}

}  // namespace textkg
