#include "data/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/errors.hpp"

namespace grl {

namespace {

// Image work stays single-threaded so results do not depend on scheduling.
struct OpenCvSetup {
  OpenCvSetup() { cv::setNumThreads(1); }
};
const OpenCvSetup setup;

Tensor mat_to_tensor(const cv::Mat& bgr) {
  Tensor out = Tensor::zeros({3, bgr.rows, bgr.cols});
  double* d = out.data();
  const int64_t plane = static_cast<int64_t>(bgr.rows) * bgr.cols;
  for (int y = 0; y < bgr.rows; ++y) {
    for (int x = 0; x < bgr.cols; ++x) {
      const cv::Vec3b px = bgr.at<cv::Vec3b>(y, x);
      const int64_t at = static_cast<int64_t>(y) * bgr.cols + x;
      d[0 * plane + at] = px[2] / 255.0;  // R
      d[1 * plane + at] = px[1] / 255.0;  // G
      d[2 * plane + at] = px[0] / 255.0;  // B
    }
  }
  return out;
}

uint8_t to_byte(double v) {
  const double scaled = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<uint8_t>(scaled);
}

cv::Mat tensor_to_mat(const Tensor& image) {
  check_shape(image.shape().size() == 3 && image.shape()[0] == 3,
              "expected a [3, H, W] image, got " + shape_str(image.shape()));
  const int64_t h = image.shape()[1];
  const int64_t w = image.shape()[2];
  const int64_t plane = h * w;
  const double* d = image.data();
  cv::Mat bgr(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const int64_t at = y * w + x;
      bgr.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x)) =
          cv::Vec3b(to_byte(d[2 * plane + at]), to_byte(d[1 * plane + at]),
                    to_byte(d[0 * plane + at]));
    }
  }
  return bgr;
}

cv::Mat gray_mat(const Tensor& image) {
  Shape shape = image.shape();
  if (shape.size() == 3 && shape[0] == 1) shape = {shape[1], shape[2]};
  check_shape(shape.size() == 2,
              "expected a [H, W] or [1, H, W] map, got " + shape_str(image.shape()));
  const int64_t h = shape[0];
  const int64_t w = shape[1];
  const double* d = image.data();
  cv::Mat gray(static_cast<int>(h), static_cast<int>(w), CV_8UC1);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      gray.at<uint8_t>(static_cast<int>(y), static_cast<int>(x)) = to_byte(d[y * w + x]);
    }
  }
  return gray;
}

void write_png(const std::string& path, const cv::Mat& mat) {
  if (!cv::imwrite(path, mat)) throw IoError("cannot write image: " + path);
}

}  // namespace

Tensor load_image_native(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot read image: " + path);
  return mat_to_tensor(bgr);
}

Tensor load_image(const std::string& path, int64_t height, int64_t width) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot read image: " + path);
  if (bgr.rows != height || bgr.cols != width) {
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
               cv::INTER_LINEAR);
    bgr = resized;
  }
  return mat_to_tensor(bgr);
}

void save_image(const std::string& path, const Tensor& image) {
  write_png(path, tensor_to_mat(image));
}

void save_image_gray(const std::string& path, const Tensor& image) {
  write_png(path, gray_mat(image));
}

void save_image_pseudocolor(const std::string& path, const Tensor& image) {
  cv::Mat colored;
  cv::applyColorMap(gray_mat(image), colored, cv::COLORMAP_JET);
  write_png(path, colored);
}

Tensor resize_map(const Tensor& map, int64_t height, int64_t width) {
  Shape shape = map.shape();
  const bool leading = shape.size() == 3 && shape[0] == 1;
  if (leading) shape = {shape[1], shape[2]};
  check_shape(shape.size() == 2,
              "expected a [H, W] or [1, H, W] map, got " + shape_str(map.shape()));
  cv::Mat src(static_cast<int>(shape[0]), static_cast<int>(shape[1]), CV_64FC1);
  const double* d = map.data();
  for (int64_t y = 0; y < shape[0]; ++y) {
    for (int64_t x = 0; x < shape[1]; ++x) {
      src.at<double>(static_cast<int>(y), static_cast<int>(x)) = d[y * shape[1] + x];
    }
  }
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_LINEAR);
  Tensor out = Tensor::zeros(leading ? Shape{1, height, width} : Shape{height, width});
  double* o = out.data();
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      o[y * width + x] = dst.at<double>(static_cast<int>(y), static_cast<int>(x));
    }
  }
  return out;
}

}  // namespace grl
