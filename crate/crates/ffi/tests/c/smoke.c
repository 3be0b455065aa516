#include <stdio.h>
#include <string.h>

#include "ipils.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      const char *msg = ipils_last_error();                          \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
              msg ? msg : "no error");                               \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  IpilsInstance *inst = NULL;
  CHECK(ipils_instance_parse("4 2\n6\n2 3 4\n3 5 2\n4 1 5\n5 4 3\n", "T1",
                             &inst) == IPILS_STATUS_OK);
  CHECK(ipils_instance_num_items(inst) == 4);

  IpilsFront *front = NULL;
  CHECK(ipils_front_compute(inst, &front) == IPILS_STATUS_OK);
  CHECK(ipils_front_len(front) == 2);
  int64_t z[2];
  CHECK(ipils_front_point(front, 1, z, 2) == IPILS_STATUS_OK);
  CHECK(z[0] == 4 && z[1] == 9);

  IpilsService *svc = ipils_service_new();
  char *resp = NULL;
  CHECK(ipils_service_request(svc, "{\"method\":\"session.start\",\"params\":{\"session\":\"nope\"}}",
                              &resp) == IPILS_STATUS_NOT_FOUND);
  CHECK(strstr(resp, "not-found") != NULL);
  ipils_string_free(resp);

  IpilsInstance *bad = NULL;
  CHECK(ipils_instance_parse("", "x", &bad) == IPILS_STATUS_PARSE);
  CHECK(strstr(ipils_last_error(), "line 1") != NULL);

  ipils_service_free(svc);
  ipils_front_free(front);
  ipils_instance_free(inst);
  puts("ok");
  return 0;
}
