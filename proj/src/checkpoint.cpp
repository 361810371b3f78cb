#include "lfsod/checkpoint.hpp"

#include "lfsod/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace lft {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'F', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  std::string text(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void doubles(double* dst, std::size_t n, const std::string& what) {
    if (n > (bytes_.size() - pos_) / 8) fail(what);
    std::memcpy(dst, bytes_.data() + pos_, n * 8);
    pos_ += n * 8;
  }

 private:
  void need(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n) fail(what);
  }
  [[noreturn]] void fail(const std::string& what) {
    throw LoadError("checkpoint truncated while reading " + what + " at byte " + std::to_string(pos_));
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(std::span<const Parameter* const> params) {
  std::string out(kMagic, 4);
  for (const Parameter* p : params) {
    put_u64(out, p->name.size());
    out += p->name;
    put_u64(out, p->tensor.shape.size());
    for (Index d : p->tensor.shape) put_u64(out, static_cast<std::uint64_t>(d));
    out.append(reinterpret_cast<const char*>(p->tensor.data.data()), static_cast<std::size_t>(p->size()) * 8);
  }
  return out;
}

std::vector<CheckpointEntry> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw LoadError("checkpoint does not start with magic LFT1");
  }
  Reader r(bytes);
  r.text(4, "magic");
  std::vector<CheckpointEntry> entries;
  while (!r.done()) {
    const std::string where = "entry " + std::to_string(entries.size());
    const std::uint64_t len = r.u64(where + " name length");
    CheckpointEntry e;
    e.name = r.text(len, where + " name");
    const std::uint64_t rank = r.u64("rank of '" + e.name + "'");
    if (rank == 0 || rank > 8) throw LoadError("parameter '" + e.name + "' has invalid rank " + std::to_string(rank));
    Shape shape;
    for (std::uint64_t i = 0; i < rank; ++i) {
      const std::uint64_t d = r.u64("dims of '" + e.name + "'");
      if (d == 0 || d > (1ULL << 40)) throw LoadError("parameter '" + e.name + "' has invalid dimension");
      shape.push_back(static_cast<Index>(d));
    }
    Vector data(numel(shape));
    r.doubles(data.data(), static_cast<std::size_t>(data.size()), "payload of '" + e.name + "'");
    e.tensor = Tensor(std::move(shape), std::move(data));
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(params);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  std::map<std::string, Tensor> by_name;
  for (auto& e : decode_checkpoint(ss.str())) by_name[e.name] = std::move(e.tensor);
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw LoadError("checkpoint has no parameter '" + p->name + "'");
    if (it->second.shape != p->tensor.shape) {
      throw LoadError("parameter '" + p->name + "' has shape " + to_string(it->second.shape) + ", model expects " +
                      to_string(p->tensor.shape));
    }
    p->tensor.data = it->second.data;
    p->zero_grad();
  }
}

}  // namespace lft
