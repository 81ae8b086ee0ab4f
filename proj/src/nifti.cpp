#include "perfkit/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace perfkit {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

// Byte offsets of the NIfTI-1 header fields we use.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int dim = 40;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int descrip = 148;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int quatern_b = 256;
constexpr int qoffset_x = 268;
constexpr int srow_x = 280;
constexpr int magic = 344;
} // namespace off

struct GzCloser {
    void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

bool is_gz(const fs::path& path)
{
    return path.extension() == ".gz";
}

template <typename T>
T byteswap_value(T v)
{
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
}

class HeaderView {
public:
    explicit HeaderView(const std::array<char, kHeaderSize>& bytes, bool swap)
        : bytes_(bytes), swap_(swap)
    {
    }

    template <typename T>
    T get(int offset) const
    {
        T v;
        std::memcpy(&v, bytes_.data() + offset, sizeof(T));
        return swap_ ? byteswap_value(v) : v;
    }

private:
    const std::array<char, kHeaderSize>& bytes_;
    bool swap_;
};

template <typename T>
void put(std::array<char, kHeaderSize>& bytes, int offset, T value)
{
    std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

int bytes_per_voxel(nifti::Datatype dt)
{
    switch (dt) {
    case nifti::Datatype::uint8:
    case nifti::Datatype::int8: return 1;
    case nifti::Datatype::int16:
    case nifti::Datatype::uint16: return 2;
    case nifti::Datatype::int32:
    case nifti::Datatype::uint32:
    case nifti::Datatype::float32: return 4;
    case nifti::Datatype::float64: return 8;
    }
    return 0;
}

template <typename T>
void decode(const std::vector<char>& raw, bool swap, Eigen::ArrayXd& out)
{
    const std::size_t n = raw.size() / sizeof(T);
    out.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
        if (swap)
            v = byteswap_value(v);
        out(static_cast<Eigen::Index>(i)) = static_cast<double>(v);
    }
}

void read_exact(gzFile f, void* dst, std::size_t n, const fs::path& path)
{
    auto* p = static_cast<char*>(dst);
    while (n > 0) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
        const int got = gzread(f, p, chunk);
        if (got <= 0)
            throw ValidationError("truncated NIfTI file: " + path.string());
        p += got;
        n -= static_cast<std::size_t>(got);
    }
}

void write_exact(gzFile f, const void* src, std::size_t n, const fs::path& path)
{
    const auto* p = static_cast<const char*>(src);
    while (n > 0) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
        const int put_n = gzwrite(f, p, chunk);
        if (put_n <= 0)
            throw IoError("failed writing " + path.string());
        p += put_n;
        n -= static_cast<std::size_t>(put_n);
    }
}

std::string lower_ext_stem(const fs::path& path)
{
    std::string name = path.filename().string();
    for (const char* ext : {".nii.gz", ".nii"}) {
        const std::string e(ext);
        if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0)
            return name.substr(0, name.size() - e.size());
    }
    return path.stem().string();
}

nifti::Image image_from_volume(const Volume3& v)
{
    nifti::Image img;
    img.grid = v.grid();
    img.values = v.data().cast<double>();
    return img;
}

} // namespace

namespace nifti {

Image read_image(const fs::path& path)
{
    if (!fs::exists(path))
        throw IoError("no such file: " + path.string());
    GzHandle f(gzopen(path.c_str(), "rb"));
    if (!f)
        throw IoError("cannot open " + path.string());

    std::array<char, kHeaderSize> bytes{};
    read_exact(f.get(), bytes.data(), bytes.size(), path);

    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data() + off::sizeof_hdr, 4);
    bool swap = false;
    if (sizeof_hdr != kHeaderSize) {
        if (byteswap_value(sizeof_hdr) != kHeaderSize)
            throw ValidationError("not a NIfTI-1 file (bad header size): " + path.string());
        swap = true;
    }
    const HeaderView h(bytes, swap);
    const char* magic = bytes.data() + off::magic;
    if (std::strncmp(magic, "n+1", 3) != 0)
        throw ValidationError("unsupported NIfTI magic (expected single-file n+1): " + path.string());

    std::array<std::int16_t, 8> dim{};
    for (int i = 0; i < 8; ++i)
        dim[static_cast<std::size_t>(i)] = h.get<std::int16_t>(off::dim + 2 * i);
    int ndim = dim[0];
    if (ndim < 1 || ndim > 7)
        throw ValidationError("malformed NIfTI dim[0] in " + path.string());
    for (int i = 1; i <= ndim; ++i)
        if (dim[static_cast<std::size_t>(i)] < 1)
            throw ValidationError("malformed NIfTI dimension in " + path.string());
    while (ndim > 3 && dim[static_cast<std::size_t>(ndim)] == 1)
        --ndim;
    if (ndim != 3 && ndim != 4)
        throw ValidationError("expected a 3D or 4D NIfTI image: " + path.string());

    Image img;
    img.ndim = ndim;
    img.n_volumes = ndim == 4 ? dim[4] : 1;
    std::array<float, 8> pixdim{};
    for (int i = 0; i < 8; ++i)
        pixdim[static_cast<std::size_t>(i)] = h.get<float>(off::pixdim + 4 * i);
    Eigen::Vector3d spacing(std::abs(pixdim[1]), std::abs(pixdim[2]), std::abs(pixdim[3]));
    if (!spacing.allFinite() || (spacing.array() <= 0.0).any())
        throw ValidationError("NIfTI voxel spacing must be positive: " + path.string());

    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    if (h.get<std::int16_t>(off::qform_code) > 0) {
        for (int a = 0; a < 3; ++a)
            origin(a) = h.get<float>(off::qoffset_x + 4 * a);
    } else if (h.get<std::int16_t>(off::sform_code) > 0) {
        for (int a = 0; a < 3; ++a)
            origin(a) = h.get<float>(off::srow_x + 16 * a + 12);
    }
    img.grid = Grid3(Index3(dim[1], dim[2], dim[3]), spacing, origin);

    const auto dt = static_cast<Datatype>(h.get<std::int16_t>(off::datatype));
    const int bpv = bytes_per_voxel(dt);
    if (bpv == 0)
        throw ValidationError("unsupported NIfTI datatype " +
                              std::to_string(static_cast<int>(dt)) + " in " + path.string());
    img.datatype = dt;

    const float vox_offset = h.get<float>(off::vox_offset);
    if (!(vox_offset >= kHeaderSize))
        throw ValidationError("malformed vox_offset in " + path.string());
    std::vector<char> skip(static_cast<std::size_t>(vox_offset) - kHeaderSize);
    if (!skip.empty())
        read_exact(f.get(), skip.data(), skip.size(), path);

    const std::size_t count = img.grid.voxel_count() * static_cast<std::size_t>(img.n_volumes);
    std::vector<char> raw(count * static_cast<std::size_t>(bpv));
    read_exact(f.get(), raw.data(), raw.size(), path);

    switch (dt) {
    case Datatype::uint8: decode<std::uint8_t>(raw, swap, img.values); break;
    case Datatype::int8: decode<std::int8_t>(raw, swap, img.values); break;
    case Datatype::int16: decode<std::int16_t>(raw, swap, img.values); break;
    case Datatype::uint16: decode<std::uint16_t>(raw, swap, img.values); break;
    case Datatype::int32: decode<std::int32_t>(raw, swap, img.values); break;
    case Datatype::uint32: decode<std::uint32_t>(raw, swap, img.values); break;
    case Datatype::float32: decode<float>(raw, swap, img.values); break;
    case Datatype::float64: decode<double>(raw, swap, img.values); break;
    }

    const float slope = h.get<float>(off::scl_slope);
    const float inter = h.get<float>(off::scl_inter);
    if (std::isfinite(slope) && slope != 0.0f && !(slope == 1.0f && inter == 0.0f))
        img.values = img.values * static_cast<double>(slope) + static_cast<double>(inter);
    if (!img.values.isFinite().all())
        throw ValidationError("NIfTI image contains non-finite voxels: " + path.string());
    return img;
}

void write_image(const fs::path& path, const Image& image)
{
    const std::size_t count = image.grid.voxel_count() * static_cast<std::size_t>(image.n_volumes);
    if (static_cast<std::size_t>(image.values.size()) != count)
        throw ValidationError("image value count does not match its dims");
    if (image.datatype != Datatype::float32 && image.datatype != Datatype::uint8)
        throw ValidationError("writer supports float32 and uint8 only");
    if (path.has_parent_path() && !fs::is_directory(path.parent_path()))
        throw IoError("output directory does not exist: " + path.parent_path().string());

    std::array<char, kHeaderSize> bytes{};
    put<std::int32_t>(bytes, off::sizeof_hdr, kHeaderSize);
    const bool four_d = image.n_volumes > 1 || image.ndim == 4;
    std::array<std::int16_t, 8> dim{static_cast<std::int16_t>(four_d ? 4 : 3),
                                    static_cast<std::int16_t>(image.grid.dims.x()),
                                    static_cast<std::int16_t>(image.grid.dims.y()),
                                    static_cast<std::int16_t>(image.grid.dims.z()),
                                    static_cast<std::int16_t>(image.n_volumes),
                                    1, 1, 1};
    for (int i = 0; i < 8; ++i)
        put<std::int16_t>(bytes, off::dim + 2 * i, dim[static_cast<std::size_t>(i)]);
    const int bpv = bytes_per_voxel(image.datatype);
    put<std::int16_t>(bytes, off::datatype, static_cast<std::int16_t>(image.datatype));
    put<std::int16_t>(bytes, off::bitpix, static_cast<std::int16_t>(8 * bpv));
    std::array<float, 8> pixdim{1.0f,
                                static_cast<float>(image.grid.spacing.x()),
                                static_cast<float>(image.grid.spacing.y()),
                                static_cast<float>(image.grid.spacing.z()),
                                1.0f, 1.0f, 1.0f, 1.0f};
    for (int i = 0; i < 8; ++i)
        put<float>(bytes, off::pixdim + 4 * i, pixdim[static_cast<std::size_t>(i)]);
    put<float>(bytes, off::vox_offset, static_cast<float>(kVoxOffset));
    put<float>(bytes, off::scl_slope, 1.0f);
    put<float>(bytes, off::scl_inter, 0.0f);
    bytes[off::xyzt_units] = 2; // mm
    std::strncpy(bytes.data() + off::descrip, "perfkit", 79);
    put<std::int16_t>(bytes, off::qform_code, 1);
    put<std::int16_t>(bytes, off::sform_code, 1);
    for (int a = 0; a < 3; ++a) {
        put<float>(bytes, off::quatern_b + 4 * a, 0.0f);
        put<float>(bytes, off::qoffset_x + 4 * a, static_cast<float>(image.grid.origin(a)));
        for (int c = 0; c < 4; ++c) {
            const double v = c == 3 ? image.grid.origin(a) : (c == a ? image.grid.spacing(a) : 0.0);
            put<float>(bytes, off::srow_x + 16 * a + 4 * c, static_cast<float>(v));
        }
    }
    std::memcpy(bytes.data() + off::magic, "n+1\0", 4);

    GzHandle f(gzopen(path.c_str(), is_gz(path) ? "wb6" : "wbT"));
    if (!f)
        throw IoError("cannot create " + path.string());
    write_exact(f.get(), bytes.data(), bytes.size(), path);
    const std::array<char, 4> extension{};
    write_exact(f.get(), extension.data(), extension.size(), path);

    if (image.datatype == Datatype::float32) {
        const std::vector<float> data(image.values.begin(), image.values.end());
        write_exact(f.get(), data.data(), data.size() * sizeof(float), path);
    } else {
        if ((image.values < 0.0).any() || (image.values > 255.0).any())
            throw ValidationError("uint8 image values out of range");
        std::vector<std::uint8_t> data(count);
        for (std::size_t i = 0; i < count; ++i)
            data[i] = static_cast<std::uint8_t>(image.values(static_cast<Eigen::Index>(i)));
        write_exact(f.get(), data.data(), data.size(), path);
    }
    if (gzclose(f.release()) != Z_OK)
        throw IoError("failed closing " + path.string());
}

} // namespace nifti

std::string nifti_stem(const fs::path& path)
{
    return lower_ext_stem(path);
}

fs::path default_timing_path(const fs::path& nifti_path)
{
    return nifti_path.parent_path() / (nifti_stem(nifti_path) + "_timing.txt");
}

std::vector<double> read_timing(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open timing file " + path.string());
    std::vector<double> times;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ss(line);
        double t;
        std::string rest;
        if (!(ss >> t) || (ss >> rest))
            throw ValidationError("timing file " + path.string() + ": bad line " +
                                  std::to_string(line_no));
        times.push_back(t);
    }
    return times;
}

void write_timing(const fs::path& path, const std::vector<double>& times)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot create " + path.string());
    out.precision(17);
    for (double t : times)
        out << t << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

namespace {

Volume3 volume_from(const nifti::Image& img, std::size_t volume_index)
{
    const auto n = static_cast<Eigen::Index>(img.grid.voxel_count());
    return Volume3(img.grid,
                   img.values.segment(static_cast<Eigen::Index>(volume_index) * n, n).cast<float>());
}

DceSeries series_from(const nifti::Image& img, const fs::path& path,
                      const std::optional<fs::path>& timing_path)
{
    if (img.n_volumes < 3)
        throw ValidationError("4D series needs at least 3 frames: " + path.string());
    std::vector<Volume3> frames;
    frames.reserve(static_cast<std::size_t>(img.n_volumes));
    for (int t = 0; t < img.n_volumes; ++t)
        frames.push_back(volume_from(img, static_cast<std::size_t>(t)));

    std::optional<fs::path> sidecar = timing_path;
    if (!sidecar && fs::exists(default_timing_path(path)))
        sidecar = default_timing_path(path);
    if (!sidecar)
        return DceSeries(std::move(frames));
    auto times = read_timing(*sidecar);
    if (times.size() != frames.size())
        throw ValidationError("timing file lists " + std::to_string(times.size()) +
                              " times for " + std::to_string(frames.size()) + " frames");
    return DceSeries(std::move(frames), std::move(times), DceSeries::TimeUnit::seconds);
}

} // namespace

std::variant<Volume3, DceSeries> read_nifti(const fs::path& path,
                                            const std::optional<fs::path>& timing_path)
{
    const nifti::Image img = nifti::read_image(path);
    if (img.ndim == 3)
        return volume_from(img, 0);
    return series_from(img, path, timing_path);
}

Volume3 read_volume(const fs::path& path)
{
    const nifti::Image img = nifti::read_image(path);
    if (img.ndim != 3)
        throw ValidationError("expected 3D volume: " + path.string());
    return volume_from(img, 0);
}

DceSeries read_dce(const fs::path& path, const std::optional<fs::path>& timing_path)
{
    const nifti::Image img = nifti::read_image(path);
    if (img.ndim != 4)
        throw ValidationError("expected 4D series: " + path.string());
    return series_from(img, path, timing_path);
}

namespace {
Volume<std::uint8_t>::Storage integer_codes(const nifti::Image& img, const fs::path& path, int max_code)
{
    if (img.ndim != 3)
        throw ValidationError("expected 3D label volume: " + path.string());
    if ((img.values != img.values.round()).any() || (img.values < 0.0).any() ||
        (img.values > max_code).any())
        throw ValidationError("label volume must hold integer codes 0.." + std::to_string(max_code) +
                              ": " + path.string());
    return img.values.cast<std::uint8_t>();
}
} // namespace

LabelVolume read_labels(const fs::path& path)
{
    const nifti::Image img = nifti::read_image(path);
    return LabelVolume(img.grid, integer_codes(img, path, kNumClasses - 1));
}

Mask read_mask(const fs::path& path)
{
    const nifti::Image img = nifti::read_image(path);
    if (img.ndim != 3)
        throw ValidationError("expected 3D mask: " + path.string());
    return Mask(img.grid, (img.values != 0.0).cast<std::uint8_t>());
}

ProbabilityMap read_probability_map(const fs::path& path)
{
    const nifti::Image img = nifti::read_image(path);
    if (img.ndim != 4 || img.n_volumes != kNumClasses)
        throw ValidationError("expected a 4D probability map with 6 class volumes: " + path.string());
    const auto n = static_cast<Eigen::Index>(img.grid.voxel_count());
    ProbabilityMap::Matrix probs(kNumClasses, n);
    for (int c = 0; c < kNumClasses; ++c)
        probs.row(c) = img.values.segment(c * n, n).cast<float>().transpose();
    return ProbabilityMap(img.grid, std::move(probs));
}

void write_nifti(const fs::path& path, const Volume3& volume)
{
    nifti::write_image(path, image_from_volume(volume));
}

void write_nifti(const fs::path& path, const LabelVolume& labels)
{
    nifti::Image img;
    img.grid = labels.grid();
    img.datatype = nifti::Datatype::uint8;
    img.values = labels.data().cast<double>();
    nifti::write_image(path, img);
}

void write_nifti(const fs::path& path, const Mask& mask)
{
    nifti::Image img;
    img.grid = mask.grid();
    img.datatype = nifti::Datatype::uint8;
    img.values = mask.data().cast<double>();
    nifti::write_image(path, img);
}

namespace {
nifti::Image stack_image(const Grid3& grid, const std::vector<Volume3>& volumes)
{
    nifti::Image img;
    img.grid = grid;
    img.ndim = 4;
    img.n_volumes = static_cast<int>(volumes.size());
    const auto n = static_cast<Eigen::Index>(grid.voxel_count());
    img.values.resize(n * img.n_volumes);
    for (std::size_t c = 0; c < volumes.size(); ++c)
        img.values.segment(static_cast<Eigen::Index>(c) * n, n) = volumes[c].data().cast<double>();
    return img;
}
} // namespace

void write_nifti(const fs::path& path, const DceSeries& series)
{
    nifti::write_image(path, stack_image(series.grid(), series.frames()));
}

void write_nifti(const fs::path& path, const MultiChannel& stack)
{
    nifti::write_image(path, stack_image(stack.grid, stack.channels));
}

void write_nifti(const fs::path& path, const ProbabilityMap& probs)
{
    nifti::Image img;
    img.grid = probs.grid();
    img.ndim = 4;
    img.n_volumes = kNumClasses;
    const auto n = static_cast<Eigen::Index>(probs.size());
    img.values.resize(n * kNumClasses);
    for (int c = 0; c < kNumClasses; ++c)
        img.values.segment(c * n, n) = probs.probs().row(c).transpose().cast<double>();
    nifti::write_image(path, img);
}

} // namespace perfkit
