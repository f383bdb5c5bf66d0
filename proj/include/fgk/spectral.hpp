#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fgk {

struct ChunkConfig {
    double sample_interval_s = 0.01; // T_S
    double chunk_interval_s = 0.05;  // T_C
    double chunk_length_s = 1.0;     // w

    int stride() const;  // T_C / T_S
    int length() const;  // w / T_S
    void validate() const;
};

// samples in `seconds` at interval ts, requires an integer multiple
int samples_for(double seconds, double ts);

int frame_dim(int L);

struct SpectralSeries {
    Eigen::MatrixXd frames; // one frame per row
    ChunkConfig config;
    int origin_length = 0;
};

std::vector<std::vector<double>> chunk(const std::vector<double>& series, const ChunkConfig& cfg);

Eigen::VectorXd forward_frame(const std::vector<double>& chunk);
Eigen::VectorXd forward_frame(const double* x, int L);
std::vector<double> inverse_frame(const Eigen::VectorXd& frame, int L);

// chunk + forward_frame over all chunks
SpectralSeries stft(const std::vector<double>& series, const ChunkConfig& cfg);
SpectralSeries stft_serial(const std::vector<double>& series, const ChunkConfig& cfg);

// frames of length L starting at t*stride for t in [0, count), no padding
Eigen::MatrixXd frames_at(const std::vector<double>& series, int stride, int L, int count);

std::vector<double> reassemble(const SpectralSeries& s);

// overlap-average chunk reconstructions whose first sample sits at starts[i]
std::vector<double> overlap_average(const std::vector<std::vector<double>>& chunks, const std::vector<long>& starts,
                                    long from, long to);

} // namespace fgk
