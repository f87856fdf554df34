// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/model_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

namespace egru::io {

namespace {

// --- little-endian blob primitives -----------------------------------------

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Cursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) {
            throw DimensionError("blob shorter than header declares");
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        }
        pos += 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::vector<float> f32_array(std::size_t n) {
        std::vector<float> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = f32();
        }
        return out;
    }
    std::vector<std::uint32_t> u32_array(std::size_t n) {
        std::vector<std::uint32_t> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = u32();
        }
        return out;
    }
};

void put_csr(std::vector<std::uint8_t>& out, const CsrMatrix& m) {
    put_u32(out, m.n_rows);
    put_u32(out, m.n_cols);
    put_u32(out, static_cast<std::uint32_t>(m.nnz()));
    for (float v : m.values) {
        put_f32(out, v);
    }
    for (std::uint32_t c : m.col_indices) {
        put_u32(out, c);
    }
    for (std::uint32_t r : m.row_extents) {
        put_u32(out, r);
    }
}

CsrMatrix get_csr(Cursor& cur) {
    CsrMatrix m;
    m.n_rows = cur.u32();
    m.n_cols = cur.u32();
    const std::uint32_t nz = cur.u32();
    m.values = cur.f32_array(nz);
    m.col_indices = cur.u32_array(nz);
    m.row_extents = cur.u32_array(static_cast<std::size_t>(m.n_rows) + 1);
    m.check_invariants();
    return m;
}

void put_layer(std::vector<std::uint8_t>& out, const EgruLayerParams& p) {
    for (const CsrMatrix* m : {&p.w_u_x, &p.w_r_x, &p.w_z_x, &p.w_u_y, &p.w_r_y, &p.w_z_y}) {
        put_csr(out, *m);
    }
    for (const DenseVector* v : {&p.b_u, &p.b_r, &p.b_z, &p.theta}) {
        for (float f : *v) {
            put_f32(out, f);
        }
    }
}

EgruLayerParams get_layer(Cursor& cur, std::uint32_t n_in, std::uint32_t n_units, float lambda,
                          float epsilon) {
    EgruLayerParams p;
    p.n_in = n_in;
    p.n_units = n_units;
    p.lambda_sg = lambda;
    p.epsilon_sg = epsilon;
    p.w_u_x = get_csr(cur);
    p.w_r_x = get_csr(cur);
    p.w_z_x = get_csr(cur);
    p.w_u_y = get_csr(cur);
    p.w_r_y = get_csr(cur);
    p.w_z_y = get_csr(cur);
    p.b_u = cur.f32_array(n_units);
    p.b_r = cur.f32_array(n_units);
    p.b_z = cur.f32_array(n_units);
    p.theta = cur.f32_array(n_units);
    p.check_invariants();
    return p;
}

std::string hexfloat(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", static_cast<double>(v));
    return buf;
}

std::uint32_t crc_of(const std::vector<std::uint8_t>& blob) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, blob.empty() ? Z_NULL : blob.data(), static_cast<uInt>(blob.size())));
}

// --- header parsing ----------------------------------------------------------

struct HeaderLine {
    std::string key;
    std::istringstream rest;
};

class HeaderReader {
  public:
    HeaderReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    /// Next header line as a token stream; empty key at end marker.
    std::string next_line() {
        std::string line;
        while (pos_ < size_) {
            const char ch = static_cast<char>(data_[pos_++]);
            if (ch == '\n') {
                return line;
            }
            line.push_back(ch);
        }
        throw FormatError("unterminated model header");
    }

    std::size_t pos() const { return pos_; }

  private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::uint64_t parse_u64(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string("bad ") + what + " value: " + s);
    }
}

float parse_float(const std::string& s, const char* what) {
    char* end = nullptr;
    const float v = std::strtof(s.c_str(), &end);
    if (end == nullptr || *end != '\0') {
        throw FormatError(std::string("bad ") + what + " value: " + s);
    }
    return v;
}

struct LayerHeader {
    std::uint32_t n_in = 0;
    std::uint32_t n_units = 0;
    float lambda = 1.0f;
    float epsilon = 1.0f;
};

} // namespace

std::vector<std::uint8_t> save_model(const AnyModel& model) {
    std::vector<std::uint8_t> blob;
    std::ostringstream header;
    header << "egrusim-model v1\n";

    if (std::holds_alternative<lm::LanguageModel>(model)) {
        const auto& m = std::get<lm::LanguageModel>(model);
        m.check_invariants();
        header << "kind lm\n";
        header << "layers " << m.layers.size() << "\n";
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            const EgruLayerParams& p = m.layers[l];
            header << "layer " << l << " n_in " << p.n_in << " n_units " << p.n_units
                   << " lambda " << hexfloat(p.lambda_sg) << " epsilon "
                   << hexfloat(p.epsilon_sg) << "\n";
        }
        header << "embedding_dim " << m.embeddings.dim << "\n";
        header << "vocab " << m.embeddings.vocab_size << "\n";
        header << "vocab_begin\n";
        for (const std::string& w : m.vocab) {
            header << w << "\n";
        }
        header << "vocab_end\n";
        for (const EgruLayerParams& p : m.layers) {
            put_layer(blob, p);
        }
        for (float f : m.embeddings.vectors) {
            put_f32(blob, f);
        }
    } else {
        const auto& m = std::get<dvs::GestureClassifier>(model);
        m.check_invariants();
        header << "kind dvs\n";
        header << "layers " << m.layers.size() << "\n";
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            const EgruLayerParams& p = m.layers[l];
            header << "layer " << l << " n_in " << p.n_in << " n_units " << p.n_units
                   << " lambda " << hexfloat(p.lambda_sg) << " epsilon "
                   << hexfloat(p.epsilon_sg) << "\n";
        }
        header << "feature_dim " << m.feature_dim() << "\n";
        header << "classes " << m.n_classes() << "\n";
        for (const EgruLayerParams& p : m.layers) {
            put_layer(blob, p);
        }
        for (float f : m.readout.values) {
            put_f32(blob, f);
        }
        for (float f : m.readout_bias) {
            put_f32(blob, f);
        }
    }

    header << "blob_bytes " << blob.size() << "\n";
    char crc_buf[16];
    std::snprintf(crc_buf, sizeof crc_buf, "%08x", crc_of(blob));
    header << "checksum " << crc_buf << "\n";
    header << "end\n";

    const std::string head = header.str();
    std::vector<std::uint8_t> out(head.begin(), head.end());
    out.insert(out.end(), blob.begin(), blob.end());
    return out;
}

AnyModel load_model(const std::vector<std::uint8_t>& bytes) {
    HeaderReader reader(bytes.data(), bytes.size());
    if (reader.next_line() != "egrusim-model v1") {
        throw FormatError("not an egrusim model or unsupported version");
    }

    std::string kind;
    std::uint64_t n_layers = 0;
    std::vector<LayerHeader> layer_headers;
    std::uint64_t embedding_dim = 0;
    std::uint64_t vocab_size = 0;
    std::uint64_t feature_dim = 0;
    std::uint64_t classes = 0;
    std::vector<std::string> vocab;
    std::uint64_t blob_bytes = 0;
    bool have_blob_bytes = false;
    std::uint32_t checksum = 0;
    bool have_checksum = false;

    for (;;) {
        const std::string line = reader.next_line();
        if (line == "end") {
            break;
        }
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "kind") {
            in >> kind;
        } else if (key == "layers") {
            std::string v;
            in >> v;
            n_layers = parse_u64(v, "layers");
        } else if (key == "layer") {
            std::string idx, k1, v1, k2, v2, k3, v3, k4, v4;
            in >> idx >> k1 >> v1 >> k2 >> v2 >> k3 >> v3 >> k4 >> v4;
            if (k1 != "n_in" || k2 != "n_units" || k3 != "lambda" || k4 != "epsilon") {
                throw FormatError("malformed layer line: " + line);
            }
            LayerHeader h;
            h.n_in = static_cast<std::uint32_t>(parse_u64(v1, "n_in"));
            h.n_units = static_cast<std::uint32_t>(parse_u64(v2, "n_units"));
            h.lambda = parse_float(v3, "lambda");
            h.epsilon = parse_float(v4, "epsilon");
            layer_headers.push_back(h);
        } else if (key == "embedding_dim") {
            std::string v;
            in >> v;
            embedding_dim = parse_u64(v, "embedding_dim");
        } else if (key == "vocab") {
            std::string v;
            in >> v;
            vocab_size = parse_u64(v, "vocab");
        } else if (key == "feature_dim") {
            std::string v;
            in >> v;
            feature_dim = parse_u64(v, "feature_dim");
        } else if (key == "classes") {
            std::string v;
            in >> v;
            classes = parse_u64(v, "classes");
        } else if (key == "vocab_begin") {
            for (std::uint64_t i = 0; i < vocab_size; ++i) {
                vocab.push_back(reader.next_line());
            }
            if (reader.next_line() != "vocab_end") {
                throw FormatError("vocabulary section not terminated");
            }
        } else if (key == "blob_bytes") {
            std::string v;
            in >> v;
            blob_bytes = parse_u64(v, "blob_bytes");
            have_blob_bytes = true;
        } else if (key == "checksum") {
            std::string v;
            in >> v;
            if (v.size() != 8) {
                throw FormatError("bad checksum field: " + v);
            }
            checksum = static_cast<std::uint32_t>(std::stoul(v, nullptr, 16));
            have_checksum = true;
        } else {
            throw FormatError("unknown header field: " + key);
        }
    }

    if (kind.empty() || !have_blob_bytes || !have_checksum) {
        throw FormatError("incomplete model header");
    }
    if (layer_headers.size() != n_layers) {
        throw DimensionError("layer count disagrees with layer lines");
    }

    const std::size_t blob_start = reader.pos();
    const std::size_t available = bytes.size() - blob_start;
    if (available < blob_bytes) {
        throw ChecksumError("model file truncated: blob has " + std::to_string(available) +
                            " of " + std::to_string(blob_bytes) + " bytes");
    }
    if (available > blob_bytes) {
        throw FormatError("trailing bytes after blob");
    }
    std::vector<std::uint8_t> blob(bytes.begin() + static_cast<std::ptrdiff_t>(blob_start),
                                   bytes.end());
    if (crc_of(blob) != checksum) {
        throw ChecksumError("model blob checksum mismatch");
    }

    Cursor cur{blob.data(), blob.size()};
    std::vector<EgruLayerParams> layers;
    layers.reserve(layer_headers.size());
    for (const LayerHeader& h : layer_headers) {
        layers.push_back(get_layer(cur, h.n_in, h.n_units, h.lambda, h.epsilon));
    }

    if (kind == "lm") {
        lm::LanguageModel m;
        m.layers = std::move(layers);
        m.embeddings.vocab_size = static_cast<std::uint32_t>(vocab_size);
        m.embeddings.dim = static_cast<std::uint32_t>(embedding_dim);
        m.embeddings.vectors = cur.f32_array(vocab_size * embedding_dim);
        m.vocab = std::move(vocab);
        if (cur.pos != cur.size) {
            throw DimensionError("blob longer than header declares");
        }
        m.check_invariants();
        return m;
    }
    if (kind == "dvs") {
        dvs::GestureClassifier m;
        m.layers = std::move(layers);
        const std::uint32_t units = m.layers.empty() ? 0 : m.layers.back().n_units;
        m.readout.n_rows = static_cast<std::uint32_t>(classes);
        m.readout.n_cols = units;
        m.readout.values = cur.f32_array(classes * units);
        m.readout_bias = cur.f32_array(classes);
        if (cur.pos != cur.size) {
            throw DimensionError("blob longer than header declares");
        }
        if (feature_dim != m.feature_dim()) {
            throw DimensionError("feature_dim disagrees with first layer");
        }
        m.check_invariants();
        return m;
    }
    throw FormatError("unknown model kind: " + kind);
}

void save_model_file(const AnyModel& model, const std::string& path) {
    write_file(path, save_model(model));
}

AnyModel load_model_file(const std::string& path) {
    return load_model(read_file(path));
}

// --- DVS raw events ----------------------------------------------------------

std::vector<DvsEventRecord> load_dvs_events(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % kDvsRecordBytes != 0) {
        throw FormatError("DVS event file is not a whole number of 16-byte records");
    }
    Cursor cur{bytes.data(), bytes.size()};
    std::vector<DvsEventRecord> events;
    events.reserve(bytes.size() / kDvsRecordBytes);
    std::uint64_t prev_ts = 0;
    while (cur.pos < cur.size) {
        DvsEventRecord e{};
        e.timestamp_us = cur.u64();
        const std::uint32_t xy = cur.u32();
        e.x = static_cast<std::uint16_t>(xy & 0xffff);
        e.y = static_cast<std::uint16_t>(xy >> 16);
        const std::uint32_t tail = cur.u32();
        e.polarity = static_cast<std::uint8_t>(tail & 0xff);
        if (e.x >= kDvsSensorSize || e.y >= kDvsSensorSize) {
            throw DimensionError("DVS coordinate out of range: (" + std::to_string(e.x) + ", " +
                                 std::to_string(e.y) + ")");
        }
        if (e.polarity > 1) {
            throw FormatError("DVS polarity out of range");
        }
        if (!events.empty() && e.timestamp_us < prev_ts) {
            throw FormatError("DVS timestamps decrease");
        }
        prev_ts = e.timestamp_us;
        events.push_back(e);
    }
    return events;
}

std::vector<std::uint8_t> save_dvs_events(const std::vector<DvsEventRecord>& events) {
    std::vector<std::uint8_t> out;
    out.reserve(events.size() * kDvsRecordBytes);
    for (const DvsEventRecord& e : events) {
        put_u64(out, e.timestamp_us);
        put_u32(out, static_cast<std::uint32_t>(e.x) | (static_cast<std::uint32_t>(e.y) << 16));
        put_u32(out, e.polarity); // one byte of payload, three of padding
    }
    return out;
}

// --- feature sequences ---------------------------------------------------------

namespace {
constexpr char kFeatureMagic[4] = {'E', 'G', 'R', 'F'};
}

std::vector<DenseVector> load_features(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
        throw FormatError("not a feature file");
    }
    Cursor cur{bytes.data(), bytes.size()};
    cur.pos = 4;
    const std::uint32_t version = cur.u32();
    if (version != 1) {
        throw FormatError("unsupported feature file version");
    }
    const std::uint32_t dim = cur.u32();
    const std::uint32_t count = cur.u32();
    const std::size_t expected = 16 + static_cast<std::size_t>(dim) * count * 4;
    if (bytes.size() != expected) {
        throw DimensionError("feature file length disagrees with header");
    }
    std::vector<DenseVector> features;
    features.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        features.push_back(cur.f32_array(dim));
    }
    return features;
}

std::vector<std::uint8_t> save_features(const std::vector<DenseVector>& features) {
    std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 4);
    put_u32(out, 1);
    const std::uint32_t dim =
        features.empty() ? 0 : static_cast<std::uint32_t>(features.front().size());
    put_u32(out, dim);
    put_u32(out, static_cast<std::uint32_t>(features.size()));
    for (const DenseVector& f : features) {
        require_dim(f.size(), dim, "feature vector");
        for (float v : f) {
            put_f32(out, v);
        }
    }
    return out;
}

std::vector<DenseVector> load_features_file(const std::string& path) {
    return load_features(read_file(path));
}

void save_features_file(const std::vector<DenseVector>& features, const std::string& path) {
    write_file(path, save_features(features));
}

// --- tokens ---------------------------------------------------------------------

std::vector<std::vector<std::uint32_t>> load_tokens(const std::string& text,
                                                    const std::vector<std::string>& vocabulary,
                                                    std::uint32_t chunk_len) {
    if (vocabulary.empty()) {
        throw std::invalid_argument("empty vocabulary");
    }
    std::uint32_t unk_id = UINT32_MAX;
    for (std::uint32_t i = 0; i < vocabulary.size(); ++i) {
        if (vocabulary[i] == kUnknownToken) {
            unk_id = i;
            break;
        }
    }
    if (unk_id == UINT32_MAX) {
        throw std::invalid_argument("vocabulary has no <unk> entry");
    }
    if (chunk_len == 0) {
        throw std::invalid_argument("chunk length must be positive");
    }

    // Ids looked up through a sorted view of the vocabulary.
    std::vector<std::uint32_t> order(vocabulary.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return vocabulary[a] < vocabulary[b]; });
    const auto lookup = [&](const std::string& w) -> std::uint32_t {
        auto it = std::lower_bound(order.begin(), order.end(), w,
                                   [&](std::uint32_t id, const std::string& key) {
                                       return vocabulary[id] < key;
                                   });
        if (it != order.end() && vocabulary[*it] == w) {
            return *it;
        }
        return unk_id;
    };

    std::vector<std::vector<std::uint32_t>> chunks;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        if (chunks.empty() || chunks.back().size() == chunk_len) {
            chunks.emplace_back();
        }
        chunks.back().push_back(lookup(word));
    }
    return chunks;
}

// --- whole files -------------------------------------------------------------------

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

} // namespace egru::io
