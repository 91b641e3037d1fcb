from django.urls import path

from .views import ScenarioRunListView, CheckResultListView

urlpatterns = [
    path('runs/', ScenarioRunListView.as_view(), name='runs-list'),
    path('checks/', CheckResultListView.as_view(), name='checks-list'),
]
