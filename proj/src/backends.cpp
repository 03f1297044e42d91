#include "cloudfill/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include <httplib.h>
#include <json.hpp>

#include "cloudfill/base64.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/fusion.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/pgm_io.hpp"
#include "cloudfill/ply_io.hpp"
#include "cloudfill/rng.hpp"

namespace cloudfill {

void BackendContext::validate() const {
    if (!(timeout_seconds > 0.0))
        throw InvalidArgumentError("backend timeout must be positive");
}

Vec3 depth_colormap(double t) {
    // Piecewise-linear perceptual ramp; the green channel increases strictly,
    // so distinct inputs always map to distinct colors.
    static const Vec3 anchors[5] = {
        Vec3(0.267, 0.005, 0.329), Vec3(0.229, 0.322, 0.546), Vec3(0.128, 0.567, 0.551),
        Vec3(0.369, 0.789, 0.383), Vec3(0.993, 0.906, 0.144),
    };
    t = std::clamp(t, 0.0, 1.0);
    const int seg = std::min(int(t * 4.0), 3);
    const double local = t * 4.0 - seg;
    return anchors[seg] * (1.0 - local) + anchors[seg + 1] * local;
}

DepthImage MockBackend::inpaint_depth(const DepthImage& raw, const BinaryMask& mask,
                                      const BackendContext& ctx) {
    ctx.validate();
    if (raw.width != mask.width || raw.height != mask.height)
        throw InvalidArgumentError("inpaint mask dimensions do not match the depth image");
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (mask.bits[i] && raw.valid[i])
            throw InvalidArgumentError("inpaint mask overlaps valid depth pixels");
    if (mask.count_set() == 0) return raw;
    if (raw.count_valid() == 0)
        throw InvalidArgumentError("cannot inpaint a depth image with no valid pixels");

    const int w = raw.width, h = raw.height;
    static const int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

    // Init: every masked pixel starts at the value of the valid pixel that
    // reaches it first in a multi-source 8-neighborhood BFS; masked islands
    // no valid pixel touches fall back to the global mean.
    std::vector<double> value(raw.depth);
    std::vector<char> seen(value.size(), 0);
    std::deque<std::size_t> queue;
    double mean = 0.0;
    std::size_t valid_count = 0;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (raw.valid[i]) {
            queue.push_back(i);
            seen[i] = 1;
            mean += raw.depth[i];
            ++valid_count;
        }
    }
    mean /= double(valid_count);
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const int x = int(i % w), y = int(i / w);
        for (int k = 0; k < 8; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const std::size_t ni = std::size_t(ny) * w + nx;
            if (seen[ni] || !mask.bits[ni]) continue;
            seen[ni] = 1;
            value[ni] = value[i];
            queue.push_back(ni);
        }
    }

    std::vector<std::size_t> unknown;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!mask.bits[i]) continue;
        if (!seen[i]) value[i] = mean;
        unknown.push_back(i);
    }

    // Gauss-Seidel neighbor-mean sweeps until the largest update is below
    // 1e-6. Plain (non-overrelaxed) sweeps keep every iterate inside the
    // range of the boundary values it diffuses from.
    for (int sweep = 0; sweep < 20000; ++sweep) {
        double worst = 0.0;
        for (const std::size_t i : unknown) {
            const int x = int(i % w), y = int(i / w);
            double sum = 0.0;
            int count = 0;
            for (int k = 0; k < 8; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const std::size_t ni = std::size_t(ny) * w + nx;
                if (!raw.valid[ni] && !mask.bits[ni]) continue;
                sum += value[ni];
                ++count;
            }
            if (count == 0) continue;
            const double next = sum / count;
            worst = std::max(worst, std::abs(next - value[i]));
            value[i] = next;
        }
        if (worst < 1e-6) break;
    }

    DepthImage out = raw;
    for (const std::size_t i : unknown) {
        out.depth[i] = value[i];
        out.valid[i] = 1;
    }
    return out;
}

RgbImage MockBackend::depth_to_image(const DepthImage& depth, const BackendContext& ctx) {
    ctx.validate();
    double near = std::numeric_limits<double>::infinity();
    double far = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
        if (!depth.valid[i]) continue;
        near = std::min(near, depth.depth[i]);
        far = std::max(far, depth.depth[i]);
    }
    if (!(near <= far))
        throw InvalidArgumentError("cannot render a depth image with no valid pixels");

    RgbImage image(depth.width, depth.height);
    const double span = far - near;
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
        if (!depth.valid[i]) continue;  // invalid pixels stay black
        const double t = span > 0.0 ? (depth.depth[i] - near) / span : 0.5;
        Vec3 c = depth_colormap(t);
        // Snap to the 8-bit grid so the PPM artifact round-trips exactly.
        for (int a = 0; a < 3; ++a) c[a] = std::round(c[a] * 255.0) / 255.0;
        image.pixels[i] = c;
    }
    return image;
}

GeneratedShape MockBackend::image_to_3d(const RgbImage& image, const BackendContext& ctx,
                                        std::size_t sample_count) {
    ctx.validate();
    if (image.width < 1 || image.height < 1)
        throw InvalidArgumentError("cannot lift an empty image to 3D");
    if (sample_count < 1024)
        throw InvalidArgumentError("generated shapes need at least 1024 samples");

    Rng rng(mix_seed(ctx.seed, 0x1f3a9c2d5e7b4680ull));
    // Seeded star-shaped blob: a unit sphere with a few low-frequency radial
    // ripples, colored by an equirectangular lookup into the input image.
    constexpr int kWaves = 6;
    double amp[kWaves], freq[kWaves], phase[kWaves];
    Vec3 axis[kWaves];
    for (int k = 0; k < kWaves; ++k) {
        amp[k] = rng.uniform(0.02, 0.08);
        freq[k] = rng.uniform(1.0, 4.0);
        axis[k] = rng.unit_vector();
        phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }

    PointCloud cloud;
    cloud.points.reserve(sample_count);
    cloud.colors.reserve(sample_count);
    for (std::size_t i = 0; i < sample_count; ++i) {
        const Vec3 dir = rng.unit_vector();
        double radius = 1.0;
        for (int k = 0; k < kWaves; ++k)
            radius += amp[k] * std::cos(freq[k] * M_PI * dir.dot(axis[k]) + phase[k]);
        cloud.points.push_back(radius * dir);

        const double u = std::atan2(dir.y(), dir.x()) / (2.0 * M_PI) + 0.5;
        const double v = std::acos(std::clamp(dir.z(), -1.0, 1.0)) / M_PI;
        const int x = std::clamp(int(u * image.width), 0, image.width - 1);
        const int y = std::clamp(int(v * image.height), 0, image.height - 1);
        cloud.colors.push_back(image.at(x, y));
    }

    GeneratedShape shape;
    shape.cloud = normalize_unit(cloud).cloud;
    shape.sample_count = sample_count;
    shape.provenance = name();
    return shape;
}

GroundTruthMockBackend::GroundTruthMockBackend(GroundTruthMockOptions options)
    : options_(std::move(options)) {
    if (options_.base.size() < 1024)
        throw InvalidArgumentError("ground-truth mock needs a base cloud of at least 1024 points");
    if (!(options_.target_scale > 0.0))
        throw InvalidArgumentError("ground-truth mock target_scale must be positive");
    if (options_.max_rotation_deg < 0.0 || options_.max_translation < 0.0 ||
        options_.noise_sigma < 0.0)
        throw InvalidArgumentError("ground-truth mock perturbation bounds must be >= 0");
}

GeneratedShape GroundTruthMockBackend::image_to_3d(const RgbImage&, const BackendContext& ctx,
                                                   std::size_t sample_count) {
    ctx.validate();
    if (sample_count < 1024)
        throw InvalidArgumentError("generated shapes need at least 1024 samples");
    if (sample_count > options_.base.size())
        throw InvalidArgumentError("sample_count exceeds the ground-truth cloud size");

    // The unit-box ground truth, shrunk by target_scale so a grid search
    // that *enlarges* the result by target_scale lands back on it.
    PointCloud cloud = fps_sample(normalize_unit(options_.base).cloud, sample_count);

    Rng rng(mix_seed(ctx.seed, 0x9e3779b97f4a7c15ull));
    const Mat3 r = rng.rotation(options_.max_rotation_deg * M_PI / 180.0);
    const Vec3 t = options_.max_translation * rng.in_unit_ball();
    for (Vec3& p : cloud.points) {
        p = r * (p / options_.target_scale) + t;
        if (options_.noise_sigma > 0.0) p += rng.normal_vec3(options_.noise_sigma);
    }

    GeneratedShape shape;
    shape.cloud = std::move(cloud);
    shape.sample_count = sample_count;
    shape.provenance = name();
    return shape;
}

RemoteBackend::RemoteBackend(std::string base_url, int max_attempts)
    : base_url_(std::move(base_url)), max_attempts_(max_attempts) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (max_attempts_ < 1) throw InvalidArgumentError("max_attempts must be >= 1");
}

std::string RemoteBackend::post_for_field(const std::string& path, const std::string& body,
                                          const char* field, const BackendContext& ctx) {
    ctx.validate();
    const auto timeout =
        std::chrono::milliseconds(std::max<long long>(1, std::llround(ctx.timeout_seconds * 1000.0)));
    std::string transport_msg = "no attempt made";
    for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Result res = client.Post(path, body, "application/json");
        if (!res) {
            transport_msg = "POST " + base_url_ + path + ": " + httplib::to_string(res.error());
            continue;  // transport problems are worth one retry
        }
        if (res->status != 200)
            throw BackendError(ErrorKind::BackendProtocol,
                               "POST " + path + " returned status " + std::to_string(res->status),
                               attempt);
        const nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded())
            throw BackendError(ErrorKind::BackendProtocol, "POST " + path + ": reply is not JSON",
                               attempt);
        if (!reply.contains(field) || !reply[field].is_string())
            throw BackendError(ErrorKind::BackendProtocol,
                               "POST " + path + ": reply missing field '" + field + "'", attempt);
        return reply[field].get<std::string>();
    }
    throw BackendError(ErrorKind::BackendTransport, transport_msg, max_attempts_);
}

DepthImage RemoteBackend::inpaint_depth(const DepthImage& raw, const BinaryMask& mask,
                                        const BackendContext& ctx) {
    if (raw.width != mask.width || raw.height != mask.height)
        throw InvalidArgumentError("inpaint mask dimensions do not match the depth image");
    nlohmann::json req;
    req["depth_pgm_b64"] = base64_encode(write_depth_pgm(raw));
    req["mask_pgm_b64"] = base64_encode(write_mask_pgm(mask));
    req["prompt"] = ctx.prompt;
    req["seed"] = ctx.seed;
    const std::string payload = post_for_field("/v1/inpaint-depth", req.dump(), "depth_pgm_b64", ctx);

    DepthImage reply;
    try {
        reply = read_depth_pgm(base64_decode(payload));
    } catch (const Error& e) {
        throw BackendError(ErrorKind::BackendProtocol,
                           std::string("bad inpaint reply payload: ") + e.what(), 1);
    }
    if (reply.width != raw.width || reply.height != raw.height)
        throw BackendError(ErrorKind::BackendProtocol, "inpaint reply has wrong dimensions", 1);
    for (std::size_t i = 0; i < reply.valid.size(); ++i)
        if ((raw.valid[i] || mask.bits[i]) && !reply.valid[i])
            throw BackendError(ErrorKind::BackendProtocol,
                               "inpaint reply leaves required pixels invalid", 1);
    // Keep known pixels bit-exact; the wire format quantizes to 16 bits.
    for (std::size_t i = 0; i < reply.valid.size(); ++i)
        if (raw.valid[i]) reply.depth[i] = raw.depth[i];
    return reply;
}

RgbImage RemoteBackend::depth_to_image(const DepthImage& depth, const BackendContext& ctx) {
    nlohmann::json req;
    req["depth_pgm_b64"] = base64_encode(write_depth_pgm(depth));
    req["prompt"] = ctx.prompt;
    req["seed"] = ctx.seed;
    const std::string payload = post_for_field("/v1/depth-to-image", req.dump(), "image_ppm_b64", ctx);

    RgbImage image;
    try {
        image = read_ppm(base64_decode(payload));
    } catch (const Error& e) {
        throw BackendError(ErrorKind::BackendProtocol,
                           std::string("bad image reply payload: ") + e.what(), 1);
    }
    if (image.width != depth.width || image.height != depth.height)
        throw BackendError(ErrorKind::BackendProtocol, "image reply has wrong dimensions", 1);
    return image;
}

GeneratedShape RemoteBackend::image_to_3d(const RgbImage& image, const BackendContext& ctx,
                                          std::size_t sample_count) {
    nlohmann::json req;
    req["image_ppm_b64"] = base64_encode(write_ppm(image));
    req["prompt"] = ctx.prompt;
    req["seed"] = ctx.seed;
    req["sample_count"] = sample_count;
    const std::string payload = post_for_field("/v1/image-to-3d", req.dump(), "ply_b64", ctx);

    GeneratedShape shape;
    try {
        shape.cloud = read_ply(base64_decode(payload));
    } catch (const Error& e) {
        throw BackendError(ErrorKind::BackendProtocol,
                           std::string("bad shape reply payload: ") + e.what(), 1);
    }
    if (!shape.cloud.has_colors())
        throw BackendError(ErrorKind::BackendProtocol, "shape reply has no colors", 1);
    if (shape.cloud.size() < 1024)
        throw BackendError(ErrorKind::BackendProtocol,
                           "shape reply has only " + std::to_string(shape.cloud.size()) +
                               " points (need at least 1024)",
                           1);
    shape.sample_count = shape.cloud.size();
    shape.provenance = name();
    return shape;
}

std::unique_ptr<Backend> make_backend(const std::string& url) {
    if (url == "mock:") return std::make_unique<MockBackend>();
    if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0)
        return std::make_unique<RemoteBackend>(url);
    throw InvalidArgumentError("unknown backend '" + url + "' (expected mock: or an http(s) URL)");
}

}  // namespace cloudfill
