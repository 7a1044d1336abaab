#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"
#include "liftpose/losses.hpp"

using namespace liftpose;
using liftpose::testing::schema16;
using liftpose::testing::scratch_dir;
using liftpose::testing::synthetic_records;

namespace {

const std::filesystem::path kTenRecords =
    std::filesystem::path(LIFTPOSE_SOURCE_DIR) / "tests" / "data" / "ten_records.jsonl";

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Eigen::RowVector3d point(const Matrix& pose, const Schema& schema, int index) {
  if (index >= 0) return pose.row(index);
  return 0.5 * (pose.row(schema.left_hip()) + pose.row(schema.right_hip()));
}

template <typename Error>
std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    ingest(in, schema16(), std::nullopt, "mem");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string line_without(const std::string& joint) {
  std::string line = to_record_line(synthetic_records(1, 1).front(), schema16());
  const std::string key = "\"" + joint + "\":";
  std::size_t at = line.find(key);
  while (at != std::string::npos) {
    const std::size_t end = line.find(']', at);
    std::size_t from = at, to = end + 1;
    if (line[to] == ',') ++to;
    else if (line[from - 1] == ',') --from;
    line.erase(from, to - from);
    at = line.find(key);
  }
  return line;
}

}  // namespace

TEST_CASE("ingest a ten record file") {
  const auto records = ingest(kTenRecords, schema16());
  REQUIRE(records.size() == 10);
  CHECK(records[0].id == "pose_00");
  CHECK(records[1].action == std::optional<std::string>("sit"));
  CHECK(records[0].camera == std::optional<std::string>("c1"));
  CHECK(records[0].units == "mm");
  CHECK(!records[3].keypoints3d);
  CHECK(records[4].keypoints3d);
  // Keys arrive in reverse order in odd records; rows follow the schema.
  for (const auto& r : records) {
    REQUIRE(r.keypoints3d.has_value() == (r.id != "pose_03"));
    if (r.keypoints3d) CHECK(r.keypoints3d->leftCols(2) == r.keypoints2d);
  }
  const PoseSet set = prepare(records, schema16());
  CHECK(set.size() == 10);
  CHECK(!set.has_ground_truth());
}

TEST_CASE("ingest errors name the line and the joint") {
  const std::string good = to_record_line(synthetic_records(1, 1).front(), schema16());
  const std::string missing = error_of<SchemaError>(good + "\n# note\n" + line_without("left_wrist") + "\n");
  CHECK(missing.find("mem:3") != std::string::npos);
  CHECK(missing.find("left_wrist") != std::string::npos);

  CHECK(error_of<FormatError>("{bad json\n").find("mem:1") != std::string::npos);
  CHECK(!error_of<FormatError>(R"({"id":"a","units":"mm"})" "\n").empty());

  std::string extra = good;
  extra.replace(extra.find("\"head\""), 6, "\"tail\"");
  CHECK(error_of<SchemaError>(extra + "\n").find("tail") != std::string::npos);

  std::string px = good;
  px.replace(px.find("\"mm\""), 4, "\"px\"");
  CHECK(!error_of<FormatError>(good + "\n" + px + "\n").empty());

  std::string nan = good;
  const std::size_t at = nan.find('[') + 1;
  nan.replace(at, nan.find(',', at) - at, "NaN");
  CHECK(!error_of<FormatError>(nan + "\n").empty());

  CHECK_THROWS_AS(ingest(std::filesystem::path("/nonexistent/poses.jsonl"), schema16()), FormatError);
}

TEST_CASE("write then ingest is bit exact") {
  auto records = synthetic_records(25, 2);
  records[3].action.reset();
  records[4].camera.reset();
  records[5].keypoints3d.reset();
  records[6].keypoints2d(0, 0) = 1.0 / 3.0;
  records[6].keypoints2d(1, 1) = -1e-300;
  const auto dir = scratch_dir("records");
  write_records(dir / "r.jsonl", records, schema16(), "config_hash=0123");
  CHECK(read_text(dir / "r.jsonl").rfind("# config_hash=0123\n", 0) == 0);
  const auto back = ingest(dir / "r.jsonl", schema16());
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(back[i].action == records[i].action);
    CHECK(back[i].camera == records[i].camera);
    CHECK(back[i].units == records[i].units);
    CHECK(back[i].keypoints2d == records[i].keypoints2d);
    CHECK(back[i].keypoints3d.has_value() == records[i].keypoints3d.has_value());
    if (records[i].keypoints3d) CHECK(*back[i].keypoints3d == *records[i].keypoints3d);
  }
  write_records(dir / "again.jsonl", back, schema16(), "config_hash=0123");
  CHECK(read_text(dir / "again.jsonl") == read_text(dir / "r.jsonl"));
}

TEST_CASE("synthetic poses honour the bone-length table") {
  SynthConfig c = SynthConfig::defaults();
  c.count = 300;
  c.seed = 3;
  const auto bones = skeleton_bones(c, schema16());
  CHECK(bones.size() == 15);
  for (const auto& r : synthesize(c, schema16())) {
    REQUIRE(r.keypoints3d);
    const Matrix& p = *r.keypoints3d;
    CHECK(point(p, schema16(), -1).norm() < 1e-9);
    for (const auto& b : bones) {
      const double d = (point(p, schema16(), b.child) - point(p, schema16(), b.parent)).norm();
      CHECK(std::abs(d - b.length) <= 1e-9 * b.length);
    }
    CHECK(p.leftCols(2) == r.keypoints2d);
  }
}

TEST_CASE("zero angle ranges give the rest pose for every sample") {
  SynthConfig c = SynthConfig::defaults().rest();
  c.count = 20;
  const auto records = synthesize(c, schema16());
  for (const auto& r : records) CHECK(*r.keypoints3d == *records.front().keypoints3d);
  const Matrix& p = *records.front().keypoints3d;
  const int head = schema16().index("head"), ankle = schema16().index("left_ankle");
  CHECK(p(head, 1) > 0.0);
  CHECK(p(ankle, 1) < 0.0);
  // Left joints sit at positive x in the body frame; the rest camera is the body frame.
  CHECK(p(schema16().index("left_hip"), 0) > 0.0);
  CHECK(p(schema16().index("left_hip"), 0) == doctest::Approx(-p(schema16().index("right_hip"), 0)));
}

TEST_CASE("synthesis is deterministic per seed and validated") {
  SynthConfig c = SynthConfig::defaults();
  c.count = 30;
  c.seed = 11;
  const auto a = synthesize(c, schema16());
  const auto b = synthesize(c, schema16());
  std::ostringstream sa, sb;
  write_records(sa, a, schema16());
  write_records(sb, b, schema16());
  CHECK(sa.str() == sb.str());
  c.seed = 12;
  std::ostringstream sc;
  write_records(sc, synthesize(c, schema16()), schema16());
  CHECK(sc.str() != sa.str());

  CHECK(synth_config_from_json(to_json(c)) == c);
  SynthConfig bad = c;
  bad.bones["thigh"] = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.angles["knee_flex"] = {0.0, 3.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.bones.erase("forearm");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(synth_config_from_json(R"({"bones": {"tail": 3}})"), ConfigError);
  const auto shipped = std::filesystem::path(LIFTPOSE_SOURCE_DIR) / "data" / "synth_default.json";
  CHECK(load_synth_config(shipped) == SynthConfig::defaults());
}

TEST_CASE("ground-truth depth closes the consistency cycle on synthetic data") {
  const PoseSet set = liftpose::testing::synthetic_set(64, 4);
  const int n = set.joints();
  const Matrix z = set.gt.middleCols(2 * n, n).array().colwise() / set.scale.array();
  Rng rng(4);
  std::vector<RotationMatrix> rs;
  for (std::size_t i = 0; i < set.size(); ++i) rs.push_back(sample_rotation(rng).rotation);
  const Matrix table = rotation_table(rs);
  Matrix z_rot(set.size(), n);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::Matrix3d& m = rs[i].matrix();
    z_rot.row(r) = m(2, 0) * set.x.row(r) + m(2, 1) * set.y.row(r) + m(2, 2) * z.row(r);
  }
  Tape t;
  int calls = 0;
  BatchLiftFn oracle = [&](Var, Var) { return t.constant(calls++ == 0 ? z : z_rot); };
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) all[static_cast<std::size_t>(j)] = j;
  Var vx = t.constant(set.x), vy = t.constant(set.y);
  const CycleVars c = consistency_cycle(oracle, vx, vy, table);
  CHECK(reprojection_loss(vx, vy, c.x_back, c.y_back, all).scalar() < 1e-10);
  // Normalized ground truth matches the 2D input columns.
  CHECK((set.gt.leftCols(n).array().colwise() / set.scale.array() - set.x.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("prepare: invariants, scale definition and idempotence") {
  const auto records = synthetic_records(50, 5);
  PrepareReport report;
  const PoseSet set = prepare(records, schema16(), &report);
  CHECK(report.skipped == 0);
  REQUIRE(set.size() == 50);
  CHECK(set.has_ground_truth());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Pose2D p = set.pose(i);
    validate_pose2d(p, schema16());
    const Matrix centered = root_center(records[i].keypoints2d, schema16());
    CHECK(p.scale == centered.cwiseAbs().maxCoeff());
    CHECK(set.ground_truth(i).row(schema16().left_hip()).norm() ==
          doctest::Approx(set.ground_truth(i).row(schema16().right_hip()).norm()));
  }

  std::vector<PoseRecord> again = records;
  for (std::size_t i = 0; i < again.size(); ++i) {
    again[i].keypoints2d = set.pose(i).coords;
    again[i].keypoints3d.reset();
  }
  const PoseSet twice = prepare(again, schema16());
  CHECK((twice.x - set.x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((twice.y - set.y).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((twice.scale.array() - 1.0).abs().maxCoeff() < 1e-15);

  std::vector<PoseRecord> with_bad = records;
  with_bad[7].keypoints2d.setZero();
  PrepareReport bad_report;
  const PoseSet kept = prepare(with_bad, schema16(), &bad_report);
  CHECK(kept.size() == 49);
  CHECK(bad_report.skipped == 1);
  REQUIRE(bad_report.warnings.size() == 1);
  CHECK(bad_report.warnings[0].find(records[7].id) != std::string::npos);

  const PoseSet sub = set.subset({4, 2});
  CHECK(sub.size() == 2);
  CHECK(sub.ids[0] == set.ids[4]);
  CHECK(sub.x.row(1) == set.x.row(2));
}
