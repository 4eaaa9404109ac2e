#include "hflow/clip_io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hflow/errors.hpp"

namespace hflow {

namespace {

constexpr uint32_t kGlobalFrame = 0xFFFFFFFFu;
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeU32 = 1;
constexpr uint8_t kDtypeU8 = 2;

size_t dtype_size(uint8_t dtype) {
    switch (dtype) {
        case kDtypeF32: return 4;
        case kDtypeU32: return 4;
        case kDtypeU8: return 1;
        default: throw IoError("HFSF: unknown dtype " + std::to_string(int(dtype)));
    }
}

// ----- little-endian primitives -----

void put_u32(std::string& out, uint32_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
    out.push_back(char((v >> 16) & 0xFF));
    out.push_back(char((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Cursor {
    std::istream& in;
    size_t offset = 0;

    void read(void* dst, size_t n, const char* what) {
        in.read(static_cast<char*>(dst), std::streamsize(n));
        if (size_t(in.gcount()) != n)
            throw IoError(std::string("HFSF: truncated ") + what + " at byte offset " +
                          std::to_string(offset));
        offset += n;
    }
    uint32_t u32(const char* what) {
        uint8_t b[4];
        read(b, 4, what);
        return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
    }
    uint8_t u8(const char* what) {
        uint8_t b;
        read(&b, 1, what);
        return b;
    }
};

struct RawChunk {
    std::string tag;
    uint32_t frame = 0;
    uint8_t dtype = 0;
    std::vector<uint32_t> dims;
    std::string payload;
    size_t offset = 0;  // of the chunk header, for diagnostics
};

void append_chunk(std::string& out, const char* tag, uint32_t frame, uint8_t dtype,
                  const std::vector<uint32_t>& dims, const std::string& payload) {
    out.append(tag, 4);
    put_u32(out, frame);
    out.push_back(char(dtype));
    out.push_back(char(uint8_t(dims.size())));
    for (uint32_t d : dims) put_u32(out, d);
    out.append(payload);
}

std::string f32_payload(const float* data, size_t count) {
    std::string out;
    out.reserve(count * 4);
    for (size_t i = 0; i < count; ++i) put_f32(out, data[i]);
    return out;
}

std::string u32_payload(const uint32_t* data, size_t count) {
    std::string out;
    out.reserve(count * 4);
    for (size_t i = 0; i < count; ++i) put_u32(out, data[i]);
    return out;
}

std::string format_meta(const SceneClip& clip) {
    const Grid& g = clip.grid();
    char dt[64];
    std::snprintf(dt, sizeof dt, "%.17g", clip.meta.dt_seconds);
    std::ostringstream os;
    os << "width=" << g.width << "\nheight=" << g.height << "\nframes=" << clip.frame_count()
       << "\njoints=" << kJointCount << "\nseed=" << clip.meta.seed << "\ndt_seconds=" << dt
       << "\n";
    return os.str();
}

void parse_meta(const std::string& text, std::map<std::string, std::string>& kv) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("HFSF: malformed META line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
}

uint64_t meta_u64(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("HFSF: META missing key " + key);
    return std::stoull(it->second);
}

double meta_f64(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("HFSF: META missing key " + key);
    return std::stod(it->second);
}

void expect_dims(const RawChunk& c, const std::vector<uint32_t>& want) {
    if (c.dims != want) {
        std::ostringstream os;
        os << "HFSF: chunk " << c.tag << " frame " << c.frame << ": dimension mismatch";
        throw ValidationError(os.str());
    }
}

void copy_f32(const RawChunk& c, float* dst, size_t count) {
    if (c.dtype != kDtypeF32)
        throw ValidationError("HFSF: chunk " + c.tag + " must be f32");
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits = uint32_t(uint8_t(c.payload[i * 4])) |
                        uint32_t(uint8_t(c.payload[i * 4 + 1])) << 8 |
                        uint32_t(uint8_t(c.payload[i * 4 + 2])) << 16 |
                        uint32_t(uint8_t(c.payload[i * 4 + 3])) << 24;
        std::memcpy(&dst[i], &bits, 4);
    }
}

void copy_u32(const RawChunk& c, uint32_t* dst, size_t count) {
    if (c.dtype != kDtypeU32)
        throw ValidationError("HFSF: chunk " + c.tag + " must be u32");
    for (size_t i = 0; i < count; ++i)
        dst[i] = uint32_t(uint8_t(c.payload[i * 4])) | uint32_t(uint8_t(c.payload[i * 4 + 1])) << 8 |
                 uint32_t(uint8_t(c.payload[i * 4 + 2])) << 16 |
                 uint32_t(uint8_t(c.payload[i * 4 + 3])) << 24;
}

}  // namespace

size_t write_clip(const SceneClip& clip, std::ostream& out) {
    if (clip.frames.size() < 2) throw ValidationError("write_clip: clip needs at least 2 frames");
    const Grid& g = clip.grid();
    const uint32_t H = uint32_t(g.height);
    const uint32_t W = uint32_t(g.width);

    std::string buf;
    buf.append("HFSF", 4);
    put_u32(buf, clip.meta.version);
    bool raster = clip.frames[0].raster.has_value();
    for (const FrameRecord& f : clip.frames)
        if (f.raster.has_value() != raster)
            throw ValidationError("write_clip: raster buffers must be all-or-none across frames");
    uint32_t chunk_count = 1 + uint32_t(clip.frames.size()) * (raster ? 8 : 6);
    put_u32(buf, chunk_count);

    append_chunk(buf, "META", kGlobalFrame, kDtypeU8, {uint32_t(format_meta(clip).size())},
                 format_meta(clip));

    for (uint32_t i = 0; i < uint32_t(clip.frames.size()); ++i) {
        const FrameRecord& f = clip.frames[size_t(i)];
        if (f.depth.grid != g)
            throw ValidationError("write_clip: all frames must share one grid");
        append_chunk(buf, "DPTH", i, kDtypeF32, {H, W},
                     f32_payload(f.depth.values.data(), f.depth.values.size()));
        append_chunk(buf, "FLOW", i, kDtypeF32, {H, W, 3},
                     f32_payload(f.flow.values.data(), f.flow.values.size()));
        append_chunk(buf, "MASK", i, kDtypeU8, {H, W},
                     std::string(reinterpret_cast<const char*>(f.mask.values.data()),
                                 f.mask.values.size()));
        append_chunk(buf, "POSE", i, kDtypeF32, {uint32_t(kJointCount), 3},
                     f32_payload(f.pose_raw.data(), f.pose_raw.size()));
        append_chunk(buf, "CAMI", i, kDtypeF32, {4},
                     f32_payload(f.cam_intrinsics_raw.data(), 4));
        std::string camx = f32_payload(f.cam_rotation_raw.data(), 9);
        camx += f32_payload(f.cam_translation_raw.data(), 3);
        append_chunk(buf, "CAMX", i, kDtypeF32, {12}, camx);
        if (raster) {
            append_chunk(buf, "TRID", i, kDtypeU32, {H, W},
                         u32_payload(f.raster->tri_id.data(), f.raster->tri_id.size()));
            append_chunk(buf, "BARY", i, kDtypeF32, {H, W, 3},
                         f32_payload(f.raster->bary.data(), f.raster->bary.size()));
        }
    }

    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw IoError("write_clip: sink failure after " + std::to_string(buf.size()) +
                            " bytes");
    return buf.size();
}

size_t write_clip_file(const SceneClip& clip, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_clip: cannot open " + path);
    return write_clip(clip, out);
}

SceneClip read_clip(std::istream& in, std::vector<std::string>* warnings) {
    Cursor cur{in};
    char magic[4];
    cur.read(magic, 4, "magic");
    if (std::memcmp(magic, "HFSF", 4) != 0) throw IoError("HFSF: bad magic bytes");
    uint32_t version = cur.u32("version");
    if (version != 1) throw IoError("HFSF: unsupported version " + std::to_string(version));
    uint32_t chunk_count = cur.u32("chunk count");

    std::vector<RawChunk> chunks;
    chunks.reserve(chunk_count);
    for (uint32_t c = 0; c < chunk_count; ++c) {
        RawChunk chunk;
        chunk.offset = cur.offset;
        char tag[4];
        cur.read(tag, 4, "chunk tag");
        chunk.tag.assign(tag, 4);
        chunk.frame = cur.u32(chunk.tag.c_str());
        chunk.dtype = cur.u8(chunk.tag.c_str());
        uint8_t ndim = cur.u8(chunk.tag.c_str());
        size_t elems = 1;
        for (int d = 0; d < int(ndim); ++d) {
            uint32_t dim = cur.u32(chunk.tag.c_str());
            chunk.dims.push_back(dim);
            elems *= dim;
            if (elems > (size_t(1) << 31))
                throw IoError("HFSF: chunk " + chunk.tag + " payload too large");
        }
        chunk.payload.resize(elems * dtype_size(chunk.dtype));
        cur.read(chunk.payload.data(), chunk.payload.size(), chunk.tag.c_str());
        chunks.push_back(std::move(chunk));
    }

    const RawChunk* meta_chunk = nullptr;
    for (const RawChunk& c : chunks)
        if (c.tag == "META") meta_chunk = &c;
    if (!meta_chunk) throw ValidationError("HFSF: missing META chunk");
    std::map<std::string, std::string> kv;
    parse_meta(meta_chunk->payload, kv);
    uint32_t width = uint32_t(meta_u64(kv, "width"));
    uint32_t height = uint32_t(meta_u64(kv, "height"));
    uint32_t frames = uint32_t(meta_u64(kv, "frames"));
    uint32_t joints = uint32_t(meta_u64(kv, "joints"));
    if (joints != uint32_t(kJointCount))
        throw ValidationError("HFSF: META joints must be 24");
    if (frames < 2) throw ValidationError("HFSF: META frames must be at least 2");

    SceneClip clip;
    clip.meta.seed = meta_u64(kv, "seed");
    clip.meta.dt_seconds = meta_f64(kv, "dt_seconds");
    clip.meta.version = version;
    Grid grid{int(width), int(height)};
    clip.frames.assign(frames, FrameRecord{});
    for (FrameRecord& f : clip.frames) {
        f.depth = DepthField(grid);
        f.flow = FlowField(grid);
        f.mask = MaskField(grid);
    }
    std::vector<uint32_t> seen(frames, 0);  // bitmask of required tags per frame

    for (const RawChunk& c : chunks) {
        if (c.tag == "META") continue;
        static const std::map<std::string, int> known = {{"DPTH", 0}, {"FLOW", 1}, {"MASK", 2},
                                                         {"POSE", 3}, {"CAMI", 4}, {"CAMX", 5},
                                                         {"TRID", 6}, {"BARY", 7}};
        auto it = known.find(c.tag);
        if (it == known.end()) {
            if (warnings)
                warnings->push_back("HFSF: skipped unknown chunk " + c.tag + " at byte offset " +
                                    std::to_string(c.offset));
            continue;
        }
        if (c.frame >= frames)
            throw ValidationError("HFSF: chunk " + c.tag + " frame index out of range");
        FrameRecord& f = clip.frames[size_t(c.frame)];
        switch (it->second) {
            case 0:
                expect_dims(c, {height, width});
                copy_f32(c, f.depth.values.data(), f.depth.values.size());
                break;
            case 1:
                expect_dims(c, {height, width, 3});
                copy_f32(c, f.flow.values.data(), f.flow.values.size());
                break;
            case 2:
                expect_dims(c, {height, width});
                if (c.dtype != kDtypeU8) throw ValidationError("HFSF: MASK must be u8");
                std::memcpy(f.mask.values.data(), c.payload.data(), c.payload.size());
                break;
            case 3:
                expect_dims(c, {uint32_t(kJointCount), 3});
                copy_f32(c, f.pose_raw.data(), f.pose_raw.size());
                break;
            case 4:
                expect_dims(c, {4});
                copy_f32(c, f.cam_intrinsics_raw.data(), 4);
                break;
            case 5: {
                expect_dims(c, {12});
                float camx[12];
                copy_f32(c, camx, 12);
                std::copy(camx, camx + 9, f.cam_rotation_raw.begin());
                std::copy(camx + 9, camx + 12, f.cam_translation_raw.begin());
                break;
            }
            case 6:
                expect_dims(c, {height, width});
                if (!f.raster) f.raster.emplace(grid);
                copy_u32(c, f.raster->tri_id.data(), f.raster->tri_id.size());
                break;
            case 7:
                expect_dims(c, {height, width, 3});
                if (!f.raster) f.raster.emplace(grid);
                copy_f32(c, f.raster->bary.data(), f.raster->bary.size());
                break;
        }
        if (it->second < 6) seen[size_t(c.frame)] |= 1u << it->second;
    }

    for (uint32_t i = 0; i < frames; ++i)
        if (seen[size_t(i)] != 0x3F)
            throw ValidationError("HFSF: frame " + std::to_string(i) +
                                  " is missing required chunks");
    return clip;
}

SceneClip read_clip_file(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_clip: cannot open " + path);
    return read_clip(in, warnings);
}

}  // namespace hflow
