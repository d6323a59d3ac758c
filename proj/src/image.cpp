#include "cxrp/image.hpp"

#include "cxrp/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace cxrp::imaging {

namespace {

constexpr int kAcceptedDepths[] = {8, 10, 12, 14, 16};

bool accepted_depth(int d) {
    return std::find(std::begin(kAcceptedDepths), std::end(kAcceptedDepths), d) !=
           std::end(kAcceptedDepths);
}

int depth_for_maxval(int maxval) {
    for (int d : kAcceptedDepths) {
        if (maxval <= (1 << d) - 1) return d;
    }
    return -1;
}

struct Sidecar {
    std::map<std::string, std::string> kv;
    bool present = false;

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    double num(const std::string& k) const {
        try {
            return std::stod(kv.at(k));
        } catch (const std::exception&) {
            throw DataError("sidecar key '" + k + "' is not numeric");
        }
    }
};

Sidecar read_sidecar(const std::string& image_path) {
    Sidecar sc;
    std::string path = image_path + ".meta";
    std::ifstream in(path);
    if (!in) return sc;
    sc.present = true;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed sidecar line in " + path + ": " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        sc.kv[key] = val;
    }
    return sc;
}

void apply_sidecar(GrayImage& img, const Sidecar& sc, bool dims_from_file) {
    if (!sc.present) return;
    if (dims_from_file) {
        if (sc.has("width") && static_cast<int>(sc.num("width")) != img.width)
            throw DataError("sidecar width disagrees with file header");
        if (sc.has("height") && static_cast<int>(sc.num("height")) != img.height)
            throw DataError("sidecar height disagrees with file header");
        if (sc.has("bit_depth") && static_cast<int>(sc.num("bit_depth")) != img.bit_depth_origin)
            throw DataError("sidecar bit_depth disagrees with file header");
    }
    if (sc.has("pixel_spacing_mm")) {
        double s = sc.num("pixel_spacing_mm");
        if (!(s > 0.0)) throw DataError("sidecar pixel_spacing_mm must be positive");
        img.pixel_spacing = s;
    }
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
    if (tok.empty()) throw DataError("truncated PNM header");
    return tok;
}

long pnm_int(std::istream& in, const char* what) {
    std::string tok = pnm_token(in);
    try {
        return std::stol(tok);
    } catch (const std::exception&) {
        throw DataError(std::string("bad PNM header field ") + what + ": " + tok);
    }
}

struct PgmRaw {
    int width, height, maxval;
    std::vector<std::uint16_t> samples;
};

PgmRaw read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path);
    std::string magic = pnm_token(in);
    if (magic != "P5") throw DataError("not a binary PGM (P5) file: " + path);
    PgmRaw p;
    p.width = static_cast<int>(pnm_int(in, "width"));
    p.height = static_cast<int>(pnm_int(in, "height"));
    p.maxval = static_cast<int>(pnm_int(in, "maxval"));
    if (p.width <= 0 || p.height <= 0) throw DataError("non-positive PGM dimensions in " + path);
    if (p.maxval <= 0 || p.maxval > 65535) throw DataError("PGM maxval out of range in " + path);

    std::size_t n = static_cast<std::size_t>(p.width) * p.height;
    p.samples.resize(n);
    if (p.maxval > 255) {
        std::vector<std::uint8_t> buf(n * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) < buf.size())
            throw DataError("payload shorter than width*height in " + path);
        for (std::size_t i = 0; i < n; ++i) {
            p.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]); // big-endian per netpbm
        }
    } else {
        std::vector<std::uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) < buf.size())
            throw DataError("payload shorter than width*height in " + path);
        for (std::size_t i = 0; i < n; ++i) p.samples[i] = buf[i];
    }
    return p;
}

GrayImage load_pgm16(const std::string& path) {
    PgmRaw p = read_pgm(path);
    int depth = depth_for_maxval(p.maxval);
    if (depth < 0) throw DataError("unsupported PGM maxval in " + path);
    for (auto s : p.samples) {
        if (s > p.maxval) throw DataError("sample exceeds declared maxval in " + path);
    }
    GrayImage img;
    img.width = p.width;
    img.height = p.height;
    img.bit_depth_origin = depth;
    img.data.assign(p.samples.begin(), p.samples.end());
    return img;
}

GrayImage load_png16(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open image file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("libpng initialization failed");
    }
    std::vector<std::uint8_t> row;
    GrayImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("corrupt PNG file: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("PNG is not single-channel grayscale: " + path);
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    int passes = png_set_interlace_handling(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);

    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.bit_depth_origin = depth;
    img.data.resize(static_cast<std::size_t>(w) * h);

    std::size_t stride = png_get_rowbytes(png, info);
    std::vector<std::vector<std::uint8_t>> rows(h, std::vector<std::uint8_t>(stride));
    for (int pass = 0; pass < passes; ++pass) {
        for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, rows[y].data(), nullptr);
    }
    for (png_uint_32 y = 0; y < h; ++y) {
        const std::uint8_t* src = rows[y].data();
        double* dst = img.data.data() + static_cast<std::size_t>(y) * w;
        if (depth == 16) {
            for (png_uint_32 x = 0; x < w; ++x) dst[x] = (src[2 * x] << 8) | src[2 * x + 1];
        } else {
            for (png_uint_32 x = 0; x < w; ++x) dst[x] = src[x];
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    if (!accepted_depth(img.bit_depth_origin))
        throw DataError("unsupported PNG bit depth in " + path);
    return img;
}

GrayImage load_raw(const std::string& path) {
    Sidecar sc = read_sidecar(path);
    if (!sc.present) throw DataError("raw image requires a sidecar: " + path + ".meta");
    for (const char* key : {"width", "height", "bit_depth"}) {
        if (!sc.has(key)) throw DataError(std::string("raw sidecar missing key '") + key + "'");
    }
    int w = static_cast<int>(sc.num("width"));
    int h = static_cast<int>(sc.num("height"));
    int depth = static_cast<int>(sc.num("bit_depth"));
    if (w <= 0 || h <= 0) throw DataError("non-positive raw dimensions in sidecar");
    if (!accepted_depth(depth)) throw DataError("unsupported bit_depth in sidecar: " + std::to_string(depth));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path);
    std::size_t n = static_cast<std::size_t>(w) * h;
    std::size_t bytes_per = depth <= 8 ? 1 : 2;
    std::vector<std::uint8_t> buf(n * bytes_per);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) < buf.size())
        throw DataError("payload shorter than width*height in " + path);

    std::uint32_t limit = (1u << depth) - 1;
    GrayImage img;
    img.width = w;
    img.height = h;
    img.bit_depth_origin = depth;
    img.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = bytes_per == 1
                              ? buf[i]
                              : static_cast<std::uint32_t>(buf[2 * i] | (buf[2 * i + 1] << 8)); // little-endian
        if (v > limit) throw DataError("sample exceeds declared bit depth in " + path);
        img.data[i] = v;
    }
    return img;
}

} // namespace

std::size_t RoiMask::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

ImageFormat format_from_path(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".pgm") return ImageFormat::pgm16;
    if (ext == ".png") return ImageFormat::png16;
    if (ext == ".raw") return ImageFormat::raw_sidecar;
    throw ConfigError("cannot infer image format from extension: " + path);
}

GrayImage load_image(const std::string& path, ImageFormat format) {
    GrayImage img;
    switch (format) {
        case ImageFormat::pgm16: img = load_pgm16(path); break;
        case ImageFormat::png16: img = load_png16(path); break;
        case ImageFormat::raw_sidecar: img = load_raw(path); break;
    }
    apply_sidecar(img, read_sidecar(path), format != ImageFormat::raw_sidecar);
    for (double v : img.data) {
        if (!std::isfinite(v)) throw DataError("non-finite intensity in " + path);
    }
    return img;
}

GrayImage load_image(const std::string& path) {
    return load_image(path, format_from_path(path));
}

void save_image_pgm16(const std::string& path, const GrayImage& img, double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("save_image_pgm16 requires hi > lo");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    std::vector<std::uint8_t> buf(img.size() * 2);
    double scale = 65535.0 / (hi - lo);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = std::clamp((img.data[i] - lo) * scale, 0.0, 65535.0);
        auto q = static_cast<std::uint16_t>(std::lround(v));
        buf[2 * i] = static_cast<std::uint8_t>(q >> 8);
        buf[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

RoiMask load_mask(const std::string& path) {
    PgmRaw p = read_pgm(path);
    if (p.maxval > 255) throw DataError("mask PGM must be 8-bit: " + path);
    RoiMask m;
    m.width = p.width;
    m.height = p.height;
    m.bits.resize(p.samples.size());
    for (std::size_t i = 0; i < p.samples.size(); ++i) m.bits[i] = p.samples[i] != 0;
    return m;
}

void save_mask_pgm(const std::string& path, const RoiMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write mask file: " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<std::uint8_t> buf(mask.bits.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.bits[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

GrayImage standardize(const GrayImage& img) {
    if (img.size() == 0) throw DataError("standardize: empty image");
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(img.size());
    double var = 0.0;
    for (double v : img.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(img.size());
    if (var == 0.0) throw DataError("standardize: zero variance");
    double inv_sd = 1.0 / std::sqrt(var);
    GrayImage out = img;
    for (double& v : out.data) v = (v - mean) * inv_sd;
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ConfigError("resize: output dimensions must be >= 1");
    if (img.width < 1 || img.height < 1) throw DataError("resize: empty input image");
    GrayImage out;
    out.width = out_w;
    out.height = out_h;
    out.bit_depth_origin = img.bit_depth_origin;
    out.pixel_spacing = img.pixel_spacing *
                        std::sqrt((static_cast<double>(img.width) * img.height) /
                                  (static_cast<double>(out_w) * out_h));
    if (out_w == img.width && out_h == img.height) {
        out.data = img.data;
        return out;
    }
    out.data.resize(static_cast<std::size_t>(out_w) * out_h);

    double sx = static_cast<double>(img.width) / out_w;
    double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            double top = img.at(x0, y0) * (1 - wx) + img.at(x1, y0) * wx;
            double bot = img.at(x0, y1) * (1 - wx) + img.at(x1, y1) * wx;
            out.at(x, y) = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

RoiMask resize_nearest(const RoiMask& mask, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ConfigError("resize: output dimensions must be >= 1");
    RoiMask out;
    out.width = out_w;
    out.height = out_h;
    out.bits.resize(static_cast<std::size_t>(out_w) * out_h);
    double sx = static_cast<double>(mask.width) / out_w;
    double sy = static_cast<double>(mask.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        int iy = std::clamp(static_cast<int>(std::lround((y + 0.5) * sy - 0.5)), 0, mask.height - 1);
        for (int x = 0; x < out_w; ++x) {
            int ix = std::clamp(static_cast<int>(std::lround((x + 0.5) * sx - 0.5)), 0, mask.width - 1);
            out.bits[static_cast<std::size_t>(y) * out_w + x] = mask.at(ix, iy);
        }
    }
    return out;
}

Rect bounding_box(const RoiMask& mask) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) throw DataError("bounding_box: empty mask");
    return Rect{x0, y0, x1, y1};
}

OverlapScores overlap_scores(const RoiMask& a, const RoiMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw DataError("overlap_scores: mask dimensions differ");
    std::size_t na = 0, nb = 0, inter = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        bool pa = a.bits[i] != 0;
        bool pb = b.bits[i] != 0;
        na += pa;
        nb += pb;
        inter += pa && pb;
    }
    if (na + nb == 0) throw DataError("overlap_scores: undefined overlap of two empty masks");
    OverlapScores s;
    s.dice = 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
    s.jaccard = static_cast<double>(inter) / static_cast<double>(na + nb - inter);
    return s;
}

} // namespace cxrp::imaging
