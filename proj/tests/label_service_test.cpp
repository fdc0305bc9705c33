#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "support.hpp"

#include "hsi/label_service_http.hpp"

using namespace hsi;
using service::LabelService;
using service::ServiceError;
using testing_support::TempDir;

namespace {

const nlohmann::json kSmallRun = {
    {"preprocess", {{"crop_lo", 10}, {"crop_hi", 109}, {"target_bands", 20}}},
    {"guidance", {{"perplexity", 10}, {"iterations", 150}, {"subsample", 160}}},
    {"filter", {{"K", 9}}},
    {"clustering", {{"clusters", 8}}}};

struct ServiceFixture {
  TempDir dir{"hsi_service"};
  Phantom ph = generate_phantom(PhantomSpec::standard(24, 24, 120, 0.0, 6));

  ServiceFixture() {
    save_cube(ph.raw, dir / "scan.hdr");
    std::filesystem::create_directories(dir / "refs" / "scan");
    save_cube(ph.refs.white, dir.path() / "refs" / "scan" / "white.hdr");
    save_cube(ph.refs.dark, dir.path() / "refs" / "scan" / "dark.hdr");
    save_cube(testing_support::random_cube(4, 4, 120, 1), dir / "other.hdr");
    io::write_text(dir / "broken.hdr", "rows: x\n");
  }

  // First pixel of each class in the truth map.
  PixelCoord seed_of(ClassCode c) const {
    for (std::size_t p = 0; p < ph.truth.pixels(); ++p)
      if (ph.truth.codes[p] == c) return {p / ph.truth.cols, p % ph.truth.cols};
    return {};
  }

  void label_everything(LabelService& svc) const {
    for (ClassCode c : kClasses) {
      const auto ref = seed_of(c);
      const auto r = svc.sam("scan", ref.row, ref.col, 0.05);
      svc.commit("scan", service::rle_from_json(r["mask_rle"]), c);
    }
  }
};

int status_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

}  // namespace

TEST(LabelService, ListsCubesWithStatus) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  const auto list = svc.list_cubes();
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0]["id"], "broken");
  EXPECT_EQ(list[0]["status"], "error");
  EXPECT_EQ(list[2]["id"], "scan");
  EXPECT_EQ(list[2]["bands"], 120);
  EXPECT_THROW(LabelService(fx.dir / "nope"), ConfigError);
}

TEST(LabelService, SamCountsMatchLibraryAndAreMonotone) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  const auto cube = load_cube(fx.dir / "other.hdr");
  std::size_t prev = 0;
  for (double t = 0.0; t < 0.5; t += 0.02) {
    const auto r = svc.sam("other", 1, 2, t);
    const auto expect = sam_mask(cube, {1, 2}, t);
    EXPECT_EQ(r["count"].get<std::size_t>(), expect.count());
    EXPECT_EQ(decode_rle(service::rle_from_json(r["mask_rle"]), cube.pixels()), expect.set);
    EXPECT_GE(r["count"].get<std::size_t>(), prev);
    prev = r["count"].get<std::size_t>();
  }
  EXPECT_EQ(status_of([&] { svc.sam("other", 9, 0, 0.1); }), 400);
  EXPECT_EQ(status_of([&] { svc.sam("missing", 0, 0, 0.1); }), 404);
  EXPECT_EQ(status_of([&] { svc.sam("../scan", 0, 0, 0.1); }), 404);
  EXPECT_EQ(status_of([&] { svc.sam("broken", 0, 0, 0.1); }), 422);
}

TEST(LabelService, CommitUndoRoundTripsSummary) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  const auto empty = svc.summary("scan");
  EXPECT_EQ(empty["total"], 0);
  const auto a = svc.commit("scan", {{0, 5}}, ClassCode::Tumor);
  EXPECT_EQ(a["tumor"], 5);
  const auto b = svc.commit("scan", {{3, 4}}, ClassCode::Vessel);
  EXPECT_EQ(b["tumor"], 3);
  EXPECT_EQ(b["vessel"], 4);
  EXPECT_EQ(svc.summary("scan")["undo_depth"], 2);
  const auto u = svc.undo("scan");
  EXPECT_EQ(u, a);
  svc.undo("scan");
  EXPECT_EQ(svc.summary("scan")["total"], 0);
  EXPECT_EQ(status_of([&] { svc.undo("scan"); }), 409);
  EXPECT_EQ(status_of([&] { svc.commit("scan", {{570, 10}}, ClassCode::Tumor); }), 422);
  EXPECT_EQ(status_of([&] { svc.commit("scan", {{0, 1}}, ClassCode::Unlabeled); }), 400);
}

TEST(LabelService, UndoDepthIsBounded) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path(), 2);
  for (std::size_t i = 0; i < 4; ++i) svc.commit("scan", {{i, 1}}, ClassCode::Normal);
  svc.undo("scan");
  svc.undo("scan");
  EXPECT_EQ(status_of([&] { svc.undo("scan"); }), 409);
  EXPECT_EQ(svc.summary("scan")["total"], 2);
}

TEST(LabelService, LabelsPersistAcrossInstances) {
  ServiceFixture fx;
  {
    LabelService svc(fx.dir.path());
    svc.commit("scan", {{10, 7}}, ClassCode::Background);
  }
  LabelService again(fx.dir.path());
  EXPECT_EQ(again.summary("scan")["background"], 7);
  EXPECT_EQ(again.labels("scan").codes[12], ClassCode::Background);
}

TEST(LabelService, ClassifyProducesMaps) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  EXPECT_EQ(status_of([&] { svc.map_png("scan", "mv"); }), 404);
  EXPECT_EQ(status_of([&] { svc.classify("other", kSmallRun); }), 409);
  fx.label_everything(svc);
  EXPECT_EQ(svc.summary("scan")["total"], 24 * 24);
  EXPECT_EQ(svc.classify("scan", kSmallRun)["status"], "running");
  svc.wait_classify("scan");
  const auto st = svc.classify_status("scan");
  ASSERT_EQ(st["status"], "done") << st.dump();
  for (const char* kind : {"mv", "omd", "tmd"}) {
    const auto bytes = svc.map_png("scan", kind);
    const auto img = png::decode(bytes);
    EXPECT_EQ(img.rows, 24u);
  }
  const auto mv = png::decode(svc.map_png("scan", "mv"));
  EXPECT_EQ(mv.rgb, png::rgb8(render_mv(fx.ph.truth)));
  EXPECT_EQ(status_of([&] { svc.map_png("scan", "rgb"); }), 400);
}

TEST(LabelService, FailedClassifyReportsError) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  svc.commit("scan", {{0, 3}}, ClassCode::Tumor);
  svc.classify("scan", kSmallRun);
  svc.wait_classify("scan");
  const auto st = svc.classify_status("scan");
  EXPECT_EQ(st["status"], "failed");
  EXPECT_TRUE(st.contains("error"));
  EXPECT_EQ(status_of([&] { svc.classify("scan", nlohmann::json::array()); }), 400);
  EXPECT_EQ(status_of([&] { svc.classify("scan", {{"mode", "warp"}}); }), 400);
}

TEST(LabelService, RgbPreview) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  const auto img = png::decode(svc.rgb_png("scan", 2.2));
  EXPECT_EQ(img.rows, 24u);
  EXPECT_EQ(img.rgb, png::rgb8(synth_rgb(fx.ph.raw, 2.2)));
  EXPECT_EQ(status_of([&] { svc.rgb_png("scan", -1.0); }), 400);
}

TEST(LabelServiceHttp, EndToEndOverLoopback) {
  ServiceFixture fx;
  LabelService svc(fx.dir.path());
  httplib::Server server;
  service::register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto get_json = [&](const std::string& path) {
    auto r = cli.Get(path);
    EXPECT_TRUE(r);
    return std::make_pair(r ? r->status : 0, r ? nlohmann::json::parse(r->body) : nlohmann::json());
  };
  auto post_json = [&](const std::string& path, const nlohmann::json& body) {
    auto r = cli.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    return std::make_pair(r ? r->status : 0, r ? nlohmann::json::parse(r->body) : nlohmann::json());
  };

  auto [s0, cubes] = get_json("/cubes");
  EXPECT_EQ(s0, 200);
  EXPECT_EQ(cubes.size(), 3u);

  auto rgb = cli.Get("/cubes/scan/rgb?gamma=1.5");
  ASSERT_TRUE(rgb);
  EXPECT_EQ(rgb->status, 200);
  EXPECT_EQ(rgb->get_header_value("Content-Type"), "image/png");

  const auto ref = fx.seed_of(ClassCode::Tumor);
  auto [s1, mask] = post_json("/cubes/scan/sam", {{"ref", {ref.row, ref.col}}, {"threshold", 0.05}});
  EXPECT_EQ(s1, 200);
  const auto tumor = dataset_summary(fx.ph.truth)[ClassCode::Tumor];
  EXPECT_EQ(mask["count"], tumor);

  auto [s2, sum] = post_json("/cubes/scan/labels", {{"mask_rle", mask["mask_rle"]}, {"class", "tumor"}});
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(sum["tumor"], tumor);
  auto [s3, sum2] = post_json("/cubes/scan/labels", {{"mask_rle", {{0, 1}}}, {"class", 4}});
  EXPECT_EQ(s3, 200);
  EXPECT_EQ(sum2["total"], tumor + 1);
  auto [s4, sum3] = post_json("/cubes/scan/labels/undo", nlohmann::json::object());
  EXPECT_EQ(s4, 200);
  EXPECT_EQ(sum3, sum);
  auto [s5, sum4] = get_json("/cubes/scan/summary");
  EXPECT_EQ(s5, 200);
  EXPECT_EQ(sum4["tumor"], tumor);

  EXPECT_EQ(post_json("/cubes/scan/labels", {{"mask_rle", {{0, 1}}}, {"class", "bone"}}).first, 400);
  EXPECT_EQ(post_json("/cubes/scan/sam", {{"ref", {0}}, {"threshold", 0.1}}).first, 400);
  EXPECT_EQ(post_json("/cubes/nope/sam", {{"ref", {0, 0}}, {"threshold", 0.1}}).first, 404);
  auto bad = cli.Post("/cubes/scan/sam", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(get_json("/cubes/scan/maps/mv").first, 404);

  svc.undo("scan");
  fx.label_everything(svc);
  auto [s6, started] = post_json("/cubes/scan/classify", {{"config", kSmallRun}});
  EXPECT_EQ(s6, 202);
  EXPECT_EQ(started["status"], "running");
  nlohmann::json st;
  for (int i = 0; i < 600; ++i) {
    st = get_json("/cubes/scan/classify").second;
    if (st["status"] != "running") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  EXPECT_EQ(st["status"], "done") << st.dump();
  auto map = cli.Get("/cubes/scan/maps/tmd");
  ASSERT_TRUE(map);
  EXPECT_EQ(map->status, 200);
  EXPECT_EQ(png::decode(std::vector<std::uint8_t>(map->body.begin(), map->body.end())).cols, 24u);

  server.stop();
  th.join();
}
