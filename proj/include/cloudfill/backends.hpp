#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "cloudfill/images.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

/// Per-request context shared by every backend call.
struct BackendContext {
    std::string prompt;
    std::uint64_t seed = 0;
    double timeout_seconds = 30.0;

    void validate() const;
};

/// Result of the image-to-3D stage: a colored cloud of at least 1024 points
/// in the unit box, plus a tag naming the producer.
struct GeneratedShape {
    PointCloud cloud;
    std::size_t sample_count = 0;
    std::string provenance;
};

/// The three pretrained-model stages the pipeline delegates: filling depth
/// holes, rendering a depth-conditioned image, and lifting the image to a
/// 3D shape. Implementations must be usable concurrently from independent
/// pipeline runs.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;

    /// Fills every masked pixel; unmasked valid pixels come back bit-exact.
    virtual DepthImage inpaint_depth(const DepthImage& raw, const BinaryMask& mask,
                                     const BackendContext& ctx) = 0;

    /// RGB raster at the depth image's resolution.
    virtual RgbImage depth_to_image(const DepthImage& depth, const BackendContext& ctx) = 0;

    virtual GeneratedShape image_to_3d(const RgbImage& image, const BackendContext& ctx,
                                       std::size_t sample_count) = 0;
};

/// Deterministic model-free stand-ins: hole filling by neighbor-mean
/// diffusion, a fixed depth colormap, and a seeded procedural shape colored
/// from the input image.
class MockBackend : public Backend {
public:
    std::string name() const override { return "mock"; }
    DepthImage inpaint_depth(const DepthImage& raw, const BinaryMask& mask,
                             const BackendContext& ctx) override;
    RgbImage depth_to_image(const DepthImage& depth, const BackendContext& ctx) override;
    GeneratedShape image_to_3d(const RgbImage& image, const BackendContext& ctx,
                               std::size_t sample_count) override;
};

struct GroundTruthMockOptions {
    PointCloud base;                 // the complete ground-truth cloud
    double target_scale = 1.0;       // the scale the grid search should recover
    double max_rotation_deg = 15.0;  // rigid perturbation bounds
    double max_translation = 0.05;
    double noise_sigma = 0.002;      // per-point Gaussian noise
};

/// Test oracle, not a user-facing backend: ignores the image and returns the
/// configured ground truth, shrunk by target_scale and rigidly perturbed
/// under the request seed. Lets harnesses verify scale and pose recovery.
class GroundTruthMockBackend : public MockBackend {
public:
    explicit GroundTruthMockBackend(GroundTruthMockOptions options);
    std::string name() const override { return "ground-truth-mock"; }
    GeneratedShape image_to_3d(const RgbImage& image, const BackendContext& ctx,
                               std::size_t sample_count) override;

private:
    GroundTruthMockOptions options_;
};

/// JSON-over-HTTP client for real model servers. Transport failures
/// (connect, timeout) are retried once; bad replies are not.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(std::string base_url, int max_attempts = 2);
    std::string name() const override { return "remote:" + base_url_; }
    DepthImage inpaint_depth(const DepthImage& raw, const BinaryMask& mask,
                             const BackendContext& ctx) override;
    RgbImage depth_to_image(const DepthImage& depth, const BackendContext& ctx) override;
    GeneratedShape image_to_3d(const RgbImage& image, const BackendContext& ctx,
                               std::size_t sample_count) override;

private:
    std::string post_for_field(const std::string& path, const std::string& body,
                               const char* field, const BackendContext& ctx);

    std::string base_url_;
    int max_attempts_;
};

/// "mock:" selects MockBackend; http:// or https:// URLs select RemoteBackend.
std::unique_ptr<Backend> make_backend(const std::string& url);

/// The mock's injective depth colormap (exposed for tests).
Vec3 depth_colormap(double t);

}  // namespace cloudfill
