#include "pods/curve_io.hpp"

#include <charconv>
#include <ostream>

namespace pods {

std::string format_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_curve_csv(std::ostream& out, const TrainingCurve& curve) {
  out << "sim_seconds,accuracy,mean_len,mean_reward,iter\n";
  for (const CurvePoint& p : curve)
    out << format_real(p.sim_seconds) << ',' << format_real(p.accuracy) << ',' << format_real(p.mean_len) << ','
        << format_real(p.mean_reward) << ',' << p.iter << '\n';
}

nlohmann::json to_json(const TrainingCurve& curve) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CurvePoint& p : curve)
    arr.push_back({{"sim_seconds", p.sim_seconds},
                   {"accuracy", p.accuracy},
                   {"mean_len", p.mean_len},
                   {"mean_reward", p.mean_reward},
                   {"iter", p.iter}});
  return arr;
}

TrainingCurve curve_from_json(const nlohmann::json& j) {
  TrainingCurve curve;
  for (const auto& p : j)
    curve.push_back(CurvePoint{p.at("sim_seconds").get<double>(), p.at("accuracy").get<double>(),
                               p.at("mean_len").get<double>(), p.at("mean_reward").get<double>(),
                               p.at("iter").get<std::size_t>()});
  return curve;
}

nlohmann::json to_json(const SelectionResult& result) {
  return {{"indices", result.indices}, {"m", result.m}, {"variance", result.variance}};
}

}  // namespace pods
