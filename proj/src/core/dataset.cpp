#include "dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace amfm {

InputKind input_kind_from_string(const std::string& name) {
    if (name == "original") return InputKind::original;
    if (name == "fm") return InputKind::fm;
    if (name == "ia") return InputKind::ia;
    if (name == "am-fm") return InputKind::am_fm;
    throw ParamError("unknown input kind: " + name);
}

std::string to_string(InputKind kind) {
    switch (kind) {
        case InputKind::original: return "original";
        case InputKind::fm: return "fm";
        case InputKind::ia: return "ia";
        case InputKind::am_fm: return "am-fm";
    }
    throw ParamError("invalid input kind value");
}

int input_kind_channels(InputKind kind) { return kind == InputKind::am_fm ? 2 : 1; }

Grid decimate_frame(const Grid& frame, bool mean_mode) {
    if (frame.h < 2 || frame.w < 2) throw ParamError("frame must be at least 2x2");
    const int oh = (frame.h + 1) / 2;
    const int ow = (frame.w + 1) / 2;
    Grid out(oh, ow);
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            if (!mean_mode) {
                out.at(r, c) = frame.at(2 * r, 2 * c);
            } else {
                double sum = 0.0;
                int n = 0;
                for (int dr = 0; dr < 2; ++dr)
                    for (int dc = 0; dc < 2; ++dc)
                        if (frame.inside(2 * r + dr, 2 * c + dc)) {
                            sum += frame.at(2 * r + dr, 2 * c + dc);
                            ++n;
                        }
                out.at(r, c) = sum / n;
            }
        }
    }
    return out;
}

Grid pad_to_grid(const Grid& frame) {
    if (frame.h > kGridHeight || frame.w > kGridWidth)
        throw ParamError("frame larger than the block grid");
    Grid out(kGridHeight, kGridWidth);
    for (int r = 0; r < frame.h; ++r)
        for (int c = 0; c < frame.w; ++c) out.at(r, c) = frame.at(r, c);
    return out;
}

std::vector<Grid> split_blocks(const Grid& frame) {
    if (frame.h != kGridHeight || frame.w != kGridWidth)
        throw ParamError("frame must be exactly 250x450");
    std::vector<Grid> blocks;
    blocks.reserve(kBlocksPerFrame);
    for (int br = 0; br < kGridRows; ++br) {
        for (int bc = 0; bc < kGridCols; ++bc) {
            Grid b(kBlockSize, kBlockSize);
            for (int r = 0; r < kBlockSize; ++r)
                for (int c = 0; c < kBlockSize; ++c)
                    b.at(r, c) = frame.at(br * kBlockSize + r, bc * kBlockSize + c);
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

std::vector<double> block_overlaps(const std::vector<FaceRect>& rects) {
    GridT<unsigned char> mask(kGridHeight, kGridWidth, 0);
    for (const FaceRect& rect : rects) {
        if (rect.w <= 0 || rect.h <= 0) throw ParamError("face rectangle must have positive size");
        const int r0 = std::max(0, rect.y);
        const int r1 = std::min(kGridHeight, rect.y + rect.h);
        const int c0 = std::max(0, rect.x);
        const int c1 = std::min(kGridWidth, rect.x + rect.w);
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) mask.at(r, c) = 1;
    }
    std::vector<double> overlaps(kBlocksPerFrame, 0.0);
    for (int br = 0; br < kGridRows; ++br) {
        for (int bc = 0; bc < kGridCols; ++bc) {
            int covered = 0;
            for (int r = 0; r < kBlockSize; ++r)
                for (int c = 0; c < kBlockSize; ++c)
                    covered += mask.at(br * kBlockSize + r, bc * kBlockSize + c);
            overlaps[static_cast<size_t>(br * kGridCols + bc)] =
                covered / static_cast<double>(kBlockSize * kBlockSize);
        }
    }
    return overlaps;
}

namespace {

std::vector<float> pack_block(const std::vector<const Grid*>& planes, int br, int bc) {
    const int channels = static_cast<int>(planes.size());
    std::vector<float> out(static_cast<size_t>(kBlockSize) * kBlockSize * static_cast<size_t>(channels));
    for (int r = 0; r < kBlockSize; ++r)
        for (int c = 0; c < kBlockSize; ++c)
            for (int ch = 0; ch < channels; ++ch)
                out[(static_cast<size_t>(r) * kBlockSize + static_cast<size_t>(c)) * static_cast<size_t>(channels) +
                    static_cast<size_t>(ch)] =
                    static_cast<float>(planes[static_cast<size_t>(ch)]->at(br * kBlockSize + r, bc * kBlockSize + c));
    return out;
}

} // namespace

std::vector<FrameInput> enumerate_corpus(const std::string& corpus_dir) {
    const std::string frames_dir = corpus_dir + "/frames";
    std::error_code ec;
    if (!std::filesystem::is_directory(frames_dir, ec))
        throw IoError("no frames directory under: " + corpus_dir);

    std::vector<FrameInput> frames;
    for (const auto& entry : std::filesystem::directory_iterator(frames_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string ext = entry.path().extension().string();
        if (ext != ".pgm" && ext != ".ppm") continue;
        const std::string stem = entry.path().stem().string();
        const size_t sep = stem.rfind('_');
        if (sep == std::string::npos || sep == 0 || sep + 1 >= stem.size())
            throw DataError("frame file must be named <video>_<frame>" + ext + ": " + name);
        FrameInput fi;
        fi.video_id = stem.substr(0, sep);
        try {
            size_t used = 0;
            fi.frame_index = std::stoi(stem.substr(sep + 1), &used);
            if (used != stem.size() - sep - 1) throw std::invalid_argument(stem);
        } catch (const std::exception&) {
            throw DataError("frame file needs a numeric frame index: " + name);
        }
        fi.path = entry.path().string();
        frames.push_back(std::move(fi));
    }
    if (frames.empty()) throw DataError("no frames found under: " + frames_dir);
    std::sort(frames.begin(), frames.end(), [](const FrameInput& a, const FrameInput& b) {
        if (a.video_id != b.video_id) return a.video_id < b.video_id;
        return a.frame_index < b.frame_index;
    });
    return frames;
}

std::vector<FaceRect> corpus_annotations(const std::string& corpus_dir, std::string* warning) {
    const std::string path = corpus_dir + "/annotations.csv";
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        if (warning) *warning = "no annotations.csv under " + corpus_dir + "; assuming zero faces";
        return {};
    }
    return load_annotations(path);
}

BlockDataset build_dataset(const std::vector<FrameInput>& frames,
                           const std::vector<FaceRect>& annotations, InputKind kind,
                           const FirFilter& filter, const KernelBank& bank, bool mean_decimation,
                           int threads) {
    if (frames.empty()) throw ParamError("no frames to build from");

    std::vector<FrameInput> ordered = frames;
    std::sort(ordered.begin(), ordered.end(), [](const FrameInput& a, const FrameInput& b) {
        if (a.video_id != b.video_id) return a.video_id < b.video_id;
        return a.frame_index < b.frame_index;
    });
    for (size_t i = 1; i < ordered.size(); ++i)
        if (ordered[i].video_id == ordered[i - 1].video_id &&
            ordered[i].frame_index == ordered[i - 1].frame_index)
            throw ParamError("duplicate frame: " + ordered[i].video_id + " minute " +
                             std::to_string(ordered[i].frame_index));

    std::map<std::pair<std::string, int>, std::vector<FaceRect>> rects_by_frame;
    for (const FaceRect& rect : annotations)
        rects_by_frame[{rect.video_id, rect.frame_index}].push_back(rect);

    BlockDataset ds;
    ds.input_kind = kind;
    ds.channels = input_kind_channels(kind);
    const size_t total = ordered.size() * static_cast<size_t>(kBlocksPerFrame);
    ds.blocks.resize(total);
    ds.targets.resize(total);
    ds.provenance.resize(total);

    parallel_for(static_cast<int>(ordered.size()), threads, [&](int fi) {
        const FrameInput& fr = ordered[static_cast<size_t>(fi)];
        const Grid gray = decimate_frame(load_image(fr.path), mean_decimation);

        // 1. Per-frame channel planes on the padded grid.
        std::vector<Grid> planes;
        if (kind == InputKind::original) {
            Grid norm(gray.h, gray.w);
            for (size_t i = 0; i < gray.data.size(); ++i) norm.data[i] = gray.data[i] / 255.0;
            planes.push_back(pad_to_grid(norm));
        } else {
            const AmFmDecomposition dec = demodulate(gray, filter, bank, 1);
            if (kind == InputKind::fm || kind == InputKind::am_fm) {
                // fm plane appended after ia for am-fm below
            }
            if (kind == InputKind::ia || kind == InputKind::am_fm) {
                double peak = 0.0;
                for (double v : dec.ia.data) peak = std::max(peak, v);
                Grid norm(dec.ia.h, dec.ia.w);
                if (peak > 0.0)
                    for (size_t i = 0; i < dec.ia.data.size(); ++i) norm.data[i] = dec.ia.data[i] / peak;
                planes.push_back(pad_to_grid(norm));
            }
            if (kind == InputKind::fm || kind == InputKind::am_fm) planes.push_back(pad_to_grid(dec.fm));
        }

        // 2. Targets from the frame's face rectangles.
        std::vector<FaceRect> rects;
        auto it = rects_by_frame.find({fr.video_id, fr.frame_index});
        if (it != rects_by_frame.end()) rects = it->second;
        const std::vector<double> overlaps = block_overlaps(rects);

        // 3. Emit the frame's 45 blocks into its reserved slice.
        std::vector<const Grid*> plane_ptrs;
        for (const Grid& p : planes) plane_ptrs.push_back(&p);
        const size_t base = static_cast<size_t>(fi) * kBlocksPerFrame;
        for (int br = 0; br < kGridRows; ++br) {
            for (int bc = 0; bc < kGridCols; ++bc) {
                const size_t slot = base + static_cast<size_t>(br * kGridCols + bc);
                ds.blocks[slot] = pack_block(plane_ptrs, br, bc);
                ds.targets[slot] = static_cast<float>(overlaps[static_cast<size_t>(br * kGridCols + bc)]);
                ds.provenance[slot] = BlockProvenance{fr.video_id, fr.frame_index, br, bc};
            }
        }
    });
    return ds;
}

namespace {

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

struct BinReader {
    std::ifstream in;
    size_t offset = 0;
    std::string path;

    void read_bytes(void* dst, size_t n, const char* what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw DataError("truncated " + std::string(what) + " at offset " + std::to_string(offset) +
                            " in " + path);
        offset += n;
    }

    uint32_t u32(const char* what) {
        unsigned char b[4];
        read_bytes(b, 4, what);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
};

} // namespace

void save_dataset(const BlockDataset& ds, const std::string& path) {
    if (ds.blocks.size() != ds.targets.size() || ds.blocks.size() != ds.provenance.size())
        throw ParamError("dataset arrays must have equal length");
    const size_t block_len = static_cast<size_t>(ds.h) * static_cast<size_t>(ds.w) *
                             static_cast<size_t>(ds.channels);
    for (const auto& b : ds.blocks)
        if (b.size() != block_len) throw ParamError("block size does not match dataset shape");

    std::string out;
    out.reserve(20 + ds.blocks.size() * (block_len + 1) * 4);
    out += "AFMD";
    put_u32(out, 1);
    put_u32(out, static_cast<uint32_t>(ds.blocks.size()));
    put_u32(out, static_cast<uint32_t>(ds.h));
    put_u32(out, static_cast<uint32_t>(ds.w));
    put_u32(out, static_cast<uint32_t>(ds.channels));
    for (const auto& b : ds.blocks)
        for (float v : b) put_f32(out, v);
    for (float t : ds.targets) put_f32(out, t);

    nlohmann::ordered_json trailer;
    trailer["input_kind"] = to_string(ds.input_kind);
    trailer["provenance"] = nlohmann::ordered_json::array();
    for (const BlockProvenance& p : ds.provenance)
        trailer["provenance"].push_back({{"video_id", p.video_id},
                                         {"frame_index", p.frame_index},
                                         {"block_row", p.block_row},
                                         {"block_col", p.block_col}});
    const std::string json = trailer.dump();
    put_u32(out, static_cast<uint32_t>(json.size()));
    out += json;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

BlockDataset load_dataset(const std::string& path) {
    BinReader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("cannot open: " + path);

    char magic[4];
    r.read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, "AFMD", 4) != 0)
        throw DataError("bad magic at offset 0 in " + path);
    const uint32_t version = r.u32("version");
    if (version != 1)
        throw DataError("unsupported version " + std::to_string(version) + " at offset 4 in " + path);
    const uint32_t count = r.u32("count");
    const uint32_t h = r.u32("height");
    const uint32_t w = r.u32("width");
    const uint32_t channels = r.u32("channels");
    if (h != kBlockSize || w != kBlockSize)
        throw DataError("unexpected block shape at offset 12 in " + path);
    if (channels != 1 && channels != 2)
        throw DataError("channel count must be 1 or 2 at offset 20 in " + path);

    BlockDataset ds;
    ds.h = static_cast<int>(h);
    ds.w = static_cast<int>(w);
    ds.channels = static_cast<int>(channels);
    const size_t block_len = static_cast<size_t>(h) * w * channels;
    ds.blocks.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        ds.blocks[i].resize(block_len);
        for (size_t k = 0; k < block_len; ++k) ds.blocks[i][k] = r.f32("block data");
    }
    ds.targets.resize(count);
    for (uint32_t i = 0; i < count; ++i) ds.targets[i] = r.f32("targets");

    const size_t json_offset = r.offset;
    const uint32_t json_len = r.u32("trailer length");
    std::string json(json_len, '\0');
    if (json_len > 0) r.read_bytes(json.data(), json_len, "trailer");
    nlohmann::json trailer;
    try {
        trailer = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad provenance trailer at offset " + std::to_string(json_offset) + " in " +
                        path + ": " + e.what());
    }
    try {
        ds.input_kind = input_kind_from_string(trailer.at("input_kind").get<std::string>());
        const auto& prov = trailer.at("provenance");
        if (prov.size() != count)
            throw DataError("provenance count mismatch in " + path);
        ds.provenance.reserve(count);
        for (const auto& p : prov)
            ds.provenance.push_back(BlockProvenance{p.at("video_id").get<std::string>(),
                                                    p.at("frame_index").get<int>(),
                                                    p.at("block_row").get<int>(),
                                                    p.at("block_col").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad provenance trailer in " + path + ": " + e.what());
    }
    if (input_kind_channels(ds.input_kind) != ds.channels)
        throw DataError("input kind does not match channel count in " + path);

    char extra;
    if (r.in.read(&extra, 1))
        throw DataError("trailing bytes at offset " + std::to_string(r.offset) + " in " + path);
    return ds;
}

void save_annotations(const std::vector<FaceRect>& rects, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "video_id,frame_index,person_tag,x,y,w,h\n";
    for (const FaceRect& r : rects)
        out << r.video_id << "," << r.frame_index << "," << r.person_tag << "," << r.x << "," << r.y
            << "," << r.w << "," << r.h << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::vector<FaceRect> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty annotation file: " + path);
    if (line != "video_id,frame_index,person_tag,x,y,w,h")
        throw DataError("unexpected annotation header: " + line);

    std::vector<FaceRect> rects;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw DataError("bad annotation row: " + line);
        FaceRect r;
        r.video_id = fields[0];
        r.person_tag = fields[2];
        try {
            r.frame_index = std::stoi(fields[1]);
            r.x = std::stoi(fields[3]);
            r.y = std::stoi(fields[4]);
            r.w = std::stoi(fields[5]);
            r.h = std::stoi(fields[6]);
        } catch (const std::exception&) {
            throw DataError("bad annotation row: " + line);
        }
        if (r.w <= 0 || r.h <= 0) throw DataError("non-positive rectangle in row: " + line);
        rects.push_back(std::move(r));
    }
    return rects;
}

BlockDataset select_videos(const BlockDataset& ds, const std::set<std::string>& ids) {
    BlockDataset out;
    out.h = ds.h;
    out.w = ds.w;
    out.channels = ds.channels;
    out.input_kind = ds.input_kind;
    for (size_t i = 0; i < ds.count(); ++i) {
        if (ids.count(ds.provenance[i].video_id)) {
            out.blocks.push_back(ds.blocks[i]);
            out.targets.push_back(ds.targets[i]);
            out.provenance.push_back(ds.provenance[i]);
        }
    }
    return out;
}

std::vector<std::string> dataset_video_ids(const BlockDataset& ds) {
    std::set<std::string> ids;
    for (const BlockProvenance& p : ds.provenance) ids.insert(p.video_id);
    return {ids.begin(), ids.end()};
}

void validate_split(const SplitSpec& split) {
    if (split.validation_fraction < 0.0 || split.validation_fraction > 0.5)
        throw ParamError("validation fraction must lie in [0, 0.5]");
    std::set<std::string> train(split.train_videos.begin(), split.train_videos.end());
    for (const std::string& id : split.test_videos)
        if (train.count(id)) throw ParamError("video in both train and test sets: " + id);
}

std::vector<std::string> validation_videos(const SplitSpec& split) {
    validate_split(split);
    std::vector<std::string> train = split.train_videos;
    std::sort(train.begin(), train.end());
    const int n_val = static_cast<int>(std::floor(split.validation_fraction * train.size() + 0.5));
    if (n_val <= 0) return {};
    return {train.end() - n_val, train.end()};
}

} // namespace amfm
