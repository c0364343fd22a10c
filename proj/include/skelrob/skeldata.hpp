#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "skelrob/rng.hpp"
#include "skelrob/tensor.hpp"

namespace skelrob::data {

// Axis convention: 0 = x (lateral, shoulder-to-shoulder), 1 = y (vertical),
// 2 = z (forward / facing direction).
inline constexpr int kAxes = 3;
inline constexpr int kJoints = 13;
inline constexpr int kFrames = 3; // window length used throughout the pipeline

enum Joint {
    HEAD = 0,
    NECK,
    L_SHOULDER,
    R_SHOULDER,
    L_ELBOW,
    R_ELBOW,
    L_HAND,
    R_HAND,
    PELVIS,
    L_KNEE,
    R_KNEE,
    L_FOOT,
    R_FOOT,
};

// Sample tensor X of shape [N, C, T, J] with integer person-ID labels.
struct SkeletonDataset {
    num::Tensor samples; // [N, C, T, J]
    std::vector<int> labels;
    int num_classes = 0;

    int n() const { return samples.shape.empty() ? 0 : samples.shape[0]; }
    void validate() const;
    std::vector<int> class_histogram() const;
};

// Bone-segment order: torso (pelvis->neck), neck->head, neck->L/R shoulder,
// L/R upper arm, L/R forearm, L/R thigh, L/R shin.
enum LimbIndex {
    TORSO = 0,
    NECK_HEAD,
    NECK_LSHOULDER,
    NECK_RSHOULDER,
    L_UPPER_ARM,
    R_UPPER_ARM,
    L_FOREARM,
    R_FOREARM,
    L_THIGH,
    R_THIGH,
    L_SHIN,
    R_SHIN,
};

struct GaitSubjectParams {
    std::array<double, 12> limb_lengths{};
    double stride_frequency = 0.2; // cycles per frame
    double phase_offset = 0.0;     // [0, 2pi)
    double arm_swing_amplitude = 0.4;
    double leg_swing_amplitude = 0.5;
    double joint_noise_stdev = 0.0;
    double occlusion_rate = 0.0;
    double null_frame_rate = 0.0;

    void validate() const;
};

struct SkeletonVideo {
    num::Tensor frames; // [C, T_video, J]
    int label = 0;
};

// Subject parameter sets for the default corpus: distinct limb proportions,
// stride frequency, phase and swing amplitudes per subject, plus mild
// noise/occlusion/null-frame pathologies.
std::vector<GaitSubjectParams> default_subject_params(int num_subjects, uint64_t seed);

std::vector<SkeletonVideo> synthesize_gait_dataset(int num_subjects, int videos_per_subject,
                                                   int frames_per_video,
                                                   const std::vector<GaitSubjectParams>& params,
                                                   uint64_t seed);

struct PreprocessResult {
    num::Tensor video; // [C, T_video, J]
    std::vector<int> degenerate_frames;
};

// Per frame: centroid to origin, rotate about the vertical axis so the
// shoulder vector lies along +x with the canonical facing sign; then one
// global scale per video so max|coordinate| <= 1.
PreprocessResult preprocess(const num::Tensor& video);

std::vector<num::Tensor> segment(const num::Tensor& video, int window = kFrames);

// Assemble windows into a dataset. Coordinates are quantized to 32-bit float
// precision here so in-memory corpora match the on-disk representation.
SkeletonDataset build_dataset(const std::vector<num::Tensor>& windows,
                              const std::vector<int>& labels, int num_classes);

// Synthesize -> preprocess -> segment, trimmed to exactly windows_per_subject
// windows per subject.
SkeletonDataset make_standard_corpus(int num_subjects, int windows_per_subject, uint64_t seed);

struct FoldSplit {
    int fold_count = 0;
    std::vector<int> assignments; // per sample, in [0, fold_count)

    std::vector<int> fold_indices(int fold) const;
    std::vector<int> complement_indices(int fold) const;
};

FoldSplit stratified_kfold(const SkeletonDataset& dataset, int fold_count, uint64_t seed);

SkeletonDataset subset(const SkeletonDataset& dataset, const std::vector<int>& indices);

// Dataset file format ("SKL1"): magic, u32 N,C,T,J,K, then N*C*T*J f32
// row-major coordinates, then N u16 labels. Little-endian.
void write_dataset(const SkeletonDataset& dataset, const std::string& path);
SkeletonDataset read_dataset(const std::string& path);

} // namespace skelrob::data
