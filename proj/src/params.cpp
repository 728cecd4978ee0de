#include "crep/params.hpp"

namespace crep {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty())
    throw data_error("matrix field must be a nonempty array of rows");
  Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  Eigen::Index nc = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != nc)
      throw data_error("matrix rows have inconsistent lengths");
    for (Eigen::Index j = 0; j < nc; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

void validate_params(const CrepParams& p) {
  if (p.k <= 0) throw data_error("community count must be positive");
  if (p.u.cols() != p.k || p.v.cols() != p.k)
    throw data_error("membership matrices must have K columns");
  if (p.u.rows() != p.v.rows())
    throw data_error("u and v must have the same number of rows");
  if (p.w.rows() != p.k || p.w.cols() != p.k)
    throw data_error("affinity matrix must be K x K");
  if ((p.u.array() < 0).any() || (p.v.array() < 0).any() ||
      (p.w.array() < 0).any())
    throw data_error("memberships and affinities must be nonnegative");
  if (p.eta < 0) throw data_error("eta must be nonnegative");
}

nlohmann::json params_to_json(const CrepParams& p,
                              const std::vector<std::string>& labels,
                              bool ground_truth) {
  nlohmann::json doc;
  doc["format"] = "crep-params";
  doc["version"] = 1;
  doc["ground_truth"] = ground_truth;
  doc["n_nodes"] = p.n_nodes();
  doc["k"] = p.k;
  doc["eta"] = p.eta;
  doc["labels"] = labels;
  doc["u"] = matrix_to_json(p.u);
  doc["v"] = matrix_to_json(p.v);
  doc["w"] = matrix_to_json(p.w);
  return doc;
}

CrepParams params_from_json(const nlohmann::json& doc) {
  CrepParams p;
  p.k = doc.at("k").get<int>();
  p.eta = doc.at("eta").get<double>();
  p.u = matrix_from_json(doc.at("u"));
  p.v = matrix_from_json(doc.at("v"));
  p.w = matrix_from_json(doc.at("w"));
  validate_params(p);
  return p;
}

std::vector<std::string> labels_from_json(const nlohmann::json& doc) {
  std::vector<std::string> labels;
  if (doc.contains("labels"))
    labels = doc.at("labels").get<std::vector<std::string>>();
  return labels;
}

}  // namespace crep
